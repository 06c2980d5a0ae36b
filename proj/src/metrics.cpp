// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#include "resid/metrics.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "resid/error.h"

namespace resid {

static void require_same(const Image &a, const Image &b) {
    if (!a.same_size(b)) throw ValidationError("metric: image dimensions differ");
}

double mse(const Image &a, const Image &b) {
    require_same(a, b);
    double s = 0;
    for (size_t i = 0; i < a.pixels.size(); ++i)
        for (int c = 0; c < 3; ++c) {
            double d = a.pixels[i][c] - b.pixels[i][c];
            s += d * d;
        }
    return a.pixels.empty() ? 0.0 : s / (3.0 * double(a.pixels.size()));
}

double mse_masked(const Image &a, const Image &b, const std::vector<char> &mask) {
    require_same(a, b);
    if (mask.size() != a.pixels.size()) throw ValidationError("metric: mask size differs");
    double s = 0;
    size_t n = 0;
    for (size_t i = 0; i < a.pixels.size(); ++i) {
        if (!mask[i]) continue;
        ++n;
        for (int c = 0; c < 3; ++c) {
            double d = a.pixels[i][c] - b.pixels[i][c];
            s += d * d;
        }
    }
    return n ? s / (3.0 * double(n)) : 0.0;
}

double display_luminance(const Rgb &c, double exposure) { return srgb_encode(c.luminance() * exposure); }

double ssim(const Image &a, const Image &b, double exposure) {
    require_same(a, b);
    constexpr int Radius = 5;
    constexpr double Sigma = 1.5, C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;
    const int w = a.width, h = a.height;
    if (w < 2 * Radius + 1 || h < 2 * Radius + 1) throw ValidationError("ssim: image smaller than the 11x11 window");

    double kernel[2 * Radius + 1], ksum = 0;
    for (int i = -Radius; i <= Radius; ++i) ksum += kernel[i + Radius] = std::exp(-0.5 * i * i / (Sigma * Sigma));
    for (double &k : kernel) k /= ksum;

    std::vector<double> x(size_t(w) * h), y(size_t(w) * h);
    for (size_t i = 0; i < x.size(); ++i) {
        x[i] = display_luminance(a.pixels[i], exposure);
        y[i] = display_luminance(b.pixels[i], exposure);
    }
    // Separable filtering of x, y, x^2, y^2, xy; horizontal pass keeps valid columns only.
    const int vw = w - 2 * Radius, vh = h - 2 * Radius;
    std::vector<std::array<double, 5>> rows(size_t(vw) * h);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < vw; ++c) {
            std::array<double, 5> acc{};
            for (int k = 0; k <= 2 * Radius; ++k) {
                size_t i = size_t(r) * w + c + k;
                double wk = kernel[k];
                acc[0] += wk * x[i];
                acc[1] += wk * y[i];
                acc[2] += wk * x[i] * x[i];
                acc[3] += wk * y[i] * y[i];
                acc[4] += wk * x[i] * y[i];
            }
            rows[size_t(r) * vw + c] = acc;
        }
    double total = 0;
    for (int r = 0; r < vh; ++r)
        for (int c = 0; c < vw; ++c) {
            std::array<double, 5> m{};
            for (int k = 0; k <= 2 * Radius; ++k)
                for (int j = 0; j < 5; ++j) m[j] += kernel[k] * rows[size_t(r + k) * vw + c][j];
            double vx = m[2] - m[0] * m[0], vy = m[3] - m[1] * m[1], cxy = m[4] - m[0] * m[1];
            total += ((2 * m[0] * m[1] + C1) * (2 * cxy + C2)) /
                     ((m[0] * m[0] + m[1] * m[1] + C1) * (vx + vy + C2));
        }
    return total / (double(vw) * vh);
}

double loglog_slope(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() != y.size() || x.size() < 3) throw ValidationError("convergence sweep needs at least 3 points");
    const size_t n = x.size();
    double mx = 0, my = 0;
    std::vector<double> lx(n), ly(n);
    for (size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0) || !(y[i] > 0)) throw ValidationError("log-log slope needs positive values");
        mx += lx[i] = std::log(x[i]);
        my += ly[i] = std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < n; ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxy / sxx;
}

double fraction_within(const Image &est, const Image &var_est, const Image &ref, const Image &var_ref,
                       double nsigma) {
    require_same(est, ref);
    require_same(est, var_est);
    require_same(est, var_ref);
    size_t pass = 0;
    for (size_t i = 0; i < est.pixels.size(); ++i) {
        bool ok = true;
        for (int c = 0; c < 3 && ok; ++c) {
            double d = std::abs(est.pixels[i][c] - ref.pixels[i][c]);
            double se = std::sqrt(var_est.pixels[i][c] + var_ref.pixels[i][c]);
            ok = se > 0 ? d <= nsigma * se : d == 0;
        }
        pass += ok;
    }
    return est.pixels.empty() ? 1.0 : double(pass) / double(est.pixels.size());
}

static std::vector<double> ranks(const std::vector<double> &v) {
    std::vector<size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (size_t i = 0; i < idx.size();) {
        size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        for (size_t m = i; m <= j; ++m) r[idx[m]] = 0.5 * double(i + j) + 1;
        i = j + 1;
    }
    return r;
}

double spearman(const std::vector<double> &a, const std::vector<double> &b) {
    if (a.size() != b.size() || a.size() < 2) throw ValidationError("spearman: need two equal-length series");
    std::vector<double> ra = ranks(a), rb = ranks(b);
    double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / ra.size();
    double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / rb.size();
    double sab = 0, saa = 0, sbb = 0;
    for (size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

} // namespace resid
