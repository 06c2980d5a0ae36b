// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#include "resid/bsdf.h"

namespace resid {

namespace {

// Orients n toward wi; returns false for grazing wi.
bool facing_normal(const Vec3 &n, const Vec3 &wi, Vec3 &out) {
    double c = dot(n, wi);
    if (c == 0) return false;
    out = c > 0 ? n : -n;
    return true;
}

} // namespace

double ggx_d(double cos_h, double alpha) {
    if (cos_h <= 0) return 0;
    double a2 = alpha * alpha;
    double d = cos_h * cos_h * (a2 - 1) + 1;
    return a2 / (Pi * d * d);
}

double ggx_g1(double cos_v, double alpha) {
    if (cos_v <= 0) return 0;
    double a2 = alpha * alpha;
    return 2 * cos_v / (cos_v + std::sqrt(a2 + (1 - a2) * cos_v * cos_v));
}

Rgb bsdf_eval(const Material &m, const Vec3 &n, const Vec3 &wi, const Vec3 &wo) {
    Vec3 nf;
    if (!facing_normal(n, wi, nf)) return {};
    double cos_i = dot(wi, nf), cos_o = dot(wo, nf);
    if (cos_o <= 0) return {};
    if (m.type == MaterialType::Lambertian) return m.albedo * InvPi;

    Vec3 h = normalize(wi + wo);
    double d = ggx_d(dot(h, nf), m.roughness);
    double g = ggx_g1(cos_i, m.roughness) * ggx_g1(cos_o, m.roughness);
    return m.albedo * (d * g / (4 * cos_i * cos_o));
}

double bsdf_pdf(const Material &m, const Vec3 &n, const Vec3 &wi, const Vec3 &wo) {
    Vec3 nf;
    if (!facing_normal(n, wi, nf)) return 0;
    double cos_o = dot(wo, nf);
    if (cos_o <= 0) return 0;
    if (m.type == MaterialType::Lambertian) return cos_o * InvPi;

    Vec3 h = normalize(wi + wo);
    double cos_h = dot(h, nf);
    double wo_h = dot(wo, h);
    if (wo_h <= 0) return 0;
    return ggx_d(cos_h, m.roughness) * cos_h / (4 * wo_h);
}

std::optional<BsdfSample> bsdf_sample(const Material &m, const Vec3 &n, const Vec3 &wi, Vec2 u) {
    Vec3 nf;
    if (!facing_normal(n, wi, nf)) return std::nullopt;
    if (m.type == MaterialType::Lambertian) {
        Vec3 wo = sample_cosine_hemisphere(nf, u);
        double pdf = dot(wo, nf) * InvPi;
        if (pdf <= 0) return std::nullopt;
        return BsdfSample{wo, pdf};
    }

    // Half vector drawn proportional to D(h) cos(theta_h).
    double a2 = m.roughness * m.roughness;
    double tan2 = a2 * u.x / (1 - u.x);
    double cos_t = 1 / std::sqrt(1 + tan2);
    double sin_t = safe_sqrt(1 - cos_t * cos_t);
    double phi = 2 * Pi * u.y;
    Onb frame(nf);
    Vec3 h = frame.to_world({sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t});
    double wi_h = dot(wi, h);
    if (wi_h <= 0) return std::nullopt;
    Vec3 wo = h * (2 * wi_h) - wi;
    double cos_o = dot(wo, nf);
    if (cos_o <= 0) return std::nullopt;
    wo = normalize(wo);
    double pdf = bsdf_pdf(m, n, wi, wo);
    if (pdf <= 0) return std::nullopt;
    return BsdfSample{wo, pdf};
}

Vec3 sample_cosine_hemisphere(const Vec3 &n, Vec2 u) {
    double r = std::sqrt(u.x);
    double phi = 2 * Pi * u.y;
    double z = safe_sqrt(1 - u.x);
    return Onb(n).to_world({r * std::cos(phi), r * std::sin(phi), z});
}

Vec3 sample_uniform_sphere(Vec2 u) {
    double z = 1 - 2 * u.x;
    double r = safe_sqrt(1 - z * z);
    double phi = 2 * Pi * u.y;
    return {r * std::cos(phi), r * std::sin(phi), z};
}

} // namespace resid
