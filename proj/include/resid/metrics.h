// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "resid/film.h"

namespace resid {

// Mean over pixels and channels of the squared difference, linear HDR.
double mse(const Image &a, const Image &b);
// Same, restricted to pixels where mask is nonzero (mask.size() == pixel count).
double mse_masked(const Image &a, const Image &b, const std::vector<char> &mask);

// Display value used for SSIM: sRGB encoding of clamped luminance * exposure.
double display_luminance(const Rgb &c, double exposure = 1.0);

// SSIM on display luminance: 11x11 Gaussian window (sigma 1.5, weights
// normalized over the window), C1 = 0.01^2, C2 = 0.03^2, data range 1,
// population covariances, mean over window positions that fit in the image.
double ssim(const Image &a, const Image &b, double exposure = 1.0);

// Least-squares slope of log(y) against log(x). Needs at least 3 points, all positive.
double loglog_slope(const std::vector<double> &x, const std::vector<double> &y);

// Per-pixel z test of an estimate against a reference: a pixel passes when
// every channel satisfies |est - ref| <= nsigma * sqrt(var_est + var_ref).
// Channels with zero pooled variance pass only on exact equality.
double fraction_within(const Image &est, const Image &var_est, const Image &ref, const Image &var_ref,
                       double nsigma);

double spearman(const std::vector<double> &a, const std::vector<double> &b);

} // namespace resid
