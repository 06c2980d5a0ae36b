// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>

#include "resid/math.h"

namespace resid {

enum class MaterialType { Lambertian, Ggx };

struct Material {
    MaterialType type = MaterialType::Lambertian;
    Rgb albedo{0.5};
    // GGX alpha. Ignored for Lambertian.
    double roughness = 1.0;
    std::string name;

    bool operator==(const Material &o) const {
        return type == o.type && albedo == o.albedo && roughness == o.roughness;
    }
};

// Roughness used by the reconnection criterion. A Lambertian surface counts as fully rough.
inline double effective_roughness(const Material &m) {
    return m.type == MaterialType::Lambertian ? 1.0 : m.roughness;
}

struct BsdfSample {
    Vec3 wo;
    double pdf = 0; // solid angle, sr^-1
};

// All BSDFs are two-sided and reflective only: the normal is flipped to the
// side of wi, and any wo on the other side evaluates to zero. wi and wo both
// point away from the surface.
Rgb bsdf_eval(const Material &m, const Vec3 &n, const Vec3 &wi, const Vec3 &wo);
double bsdf_pdf(const Material &m, const Vec3 &n, const Vec3 &wi, const Vec3 &wo);
std::optional<BsdfSample> bsdf_sample(const Material &m, const Vec3 &n, const Vec3 &wi, Vec2 u);

// Cosine-weighted hemisphere around n (not flipped).
Vec3 sample_cosine_hemisphere(const Vec3 &n, Vec2 u);
inline double cosine_hemisphere_pdf(const Vec3 &n, const Vec3 &w) {
    double c = dot(n, w);
    return c > 0 ? c * InvPi : 0.0;
}

Vec3 sample_uniform_sphere(Vec2 u);

double ggx_d(double cos_h, double alpha);
double ggx_g1(double cos_v, double alpha);

} // namespace resid
