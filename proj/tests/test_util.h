// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

// Shared helpers for the unit and acceptance tests: tiny scene builders,
// brute-force geometry oracles and a chi-square p-value.

#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "resid/fixtures.h"
#include "resid/scene.h"

namespace resid::testing {

using Tri = std::array<Vec3, 3>;

inline std::vector<Tri> quad(Vec3 a, Vec3 b, Vec3 c, Vec3 d) { return {{a, b, c}, {a, c, d}}; }

// Small scene assembled object by object; material 0 is a grey Lambertian.
struct SceneBuilder {
    Scene scene;
    std::vector<Edit> edits;

    SceneBuilder() {
        add_material(MaterialType::Lambertian, Rgb(0.5));
        scene.camera = Camera({0, 0, -5}, {0, 0, 0}, {0, 1, 0}, 40, 32, 32);
    }
    int add_material(MaterialType type, Rgb albedo, double roughness = 1.0) {
        Material m;
        m.type = type;
        m.albedo = albedo;
        m.roughness = roughness;
        m.name = "m" + std::to_string(scene.materials.size());
        scene.materials.push_back(m);
        return int(scene.materials.size()) - 1;
    }
    int add(std::vector<Tri> tris, int material = 0) {
        scene.objects.push_back({"o" + std::to_string(scene.objects.size()), std::move(tris), material});
        return int(scene.objects.size()) - 1;
    }
    int add_emitter(std::vector<Tri> tris, Rgb radiance) {
        int o = add(std::move(tris));
        scene.emitters.push_back({o, radiance});
        return o;
    }
    void move(int object, Vec3 translation, Mat3 rotation = {}) {
        edits.push_back({object, RigidTransform{rotation, translation}, std::nullopt});
    }
    void recolor(int object, int material) { edits.push_back({object, std::nullopt, material}); }
    std::unique_ptr<ScenePair> build() const { return std::make_unique<ScenePair>(scene, edits); }
};

inline std::unique_ptr<ScenePair> fixture_pair(const std::string &name, int resolution = 32) {
    Fixture f = make_fixture(name, resolution);
    return std::make_unique<ScenePair>(std::move(f.base), std::move(f.edits));
}

// Ray-plane intersection followed by a same-side edge test: a different
// algorithm from the renderer's, used as the brute-force oracle.
inline std::optional<double> oracle_ray_triangle(const Vec3 &o, const Vec3 &d, const Vec3 &a, const Vec3 &b,
                                                 const Vec3 &c) {
    Vec3 n = cross(b - a, c - a);
    double denom = dot(n, d);
    if (denom == 0) return std::nullopt;
    double t = dot(n, a - o) / denom;
    Vec3 p = o + d * t;
    if (dot(cross(b - a, p - a), n) < 0 || dot(cross(c - b, p - b), n) < 0 || dot(cross(a - c, p - c), n) < 0)
        return std::nullopt;
    return t;
}

struct OracleHit {
    double t = Infinity;
    int prim = -1;
};

// Nearest triangle solid in `view` with t in (tmin, tmax).
inline OracleHit oracle_closest(const ScenePair &pair, const Vec3 &o, const Vec3 &d, FrameId view, double tmin,
                                double tmax = Infinity) {
    OracleHit best;
    const auto &tris = pair.triangles();
    for (int i = 0; i < int(tris.size()); ++i) {
        if (!pair.solid(i, view)) continue;
        auto t = oracle_ray_triangle(o, d, tris[i].p0, tris[i].p1(), tris[i].p2());
        if (t && *t > tmin && *t < tmax && *t < best.t) best = {*t, i};
    }
    return best;
}

// Upper-tail probability of a chi-square statistic.
inline double chi_square_p(double statistic, int dof) {
    return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

// Pearson statistic over bins, pooling bins with expected count below 5.
struct ChiSquare {
    double statistic = 0;
    int dof = 0;
    double p = 1;
};

inline ChiSquare chi_square(const std::vector<double> &observed, const std::vector<double> &expected) {
    ChiSquare r;
    double obs_pool = 0, exp_pool = 0;
    int bins = 0;
    for (size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] < 5) {
            obs_pool += observed[i];
            exp_pool += expected[i];
            continue;
        }
        double d = observed[i] - expected[i];
        r.statistic += d * d / expected[i];
        ++bins;
    }
    if (exp_pool >= 5) {
        double d = obs_pool - exp_pool;
        r.statistic += d * d / exp_pool;
        ++bins;
    }
    r.dof = std::max(1, bins - 1);
    r.p = chi_square_p(r.statistic, r.dof);
    // A small pooled bin still must not hold far more hits than expected
    // (samples landing where the density claims there is no mass).
    if (exp_pool < 5 && obs_pool > 0) {
        double tail = exp_pool > 0 ? boost::math::gamma_p(obs_pool, exp_pool) : 0.0;
        if (tail < 1e-4) r.p = 0;
    }
    return r;
}

inline double rel_err(double a, double b) {
    double s = std::max(std::abs(a), std::abs(b));
    return s == 0 ? 0.0 : std::abs(a - b) / s;
}

} // namespace resid::testing
