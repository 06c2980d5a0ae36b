// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#include "resid/path.h"

#include <fmt/format.h>

namespace resid {

int Path::dynamic_vertex_count() const {
    int n = 0;
    for (const PathVertex &x : v) n += x.dynamic;
    return n;
}

int Path::crossing_count() const {
    int n = 0;
    for (const auto &c : crossings) n += int(c.size());
    return n;
}

double solid_angle_to_area(const Vec3 &from, const Vec3 &to, const Vec3 &n_to) {
    Vec3 d = to - from;
    double d2 = length_squared(d);
    return std::abs(dot(n_to, d)) / (std::sqrt(d2) * d2);
}

void compute_crossings(const ScenePair &pair, Path &path) {
    int k = path.size();
    path.crossings.assign(std::max(0, k - 1), {});
    for (int i = 0; i + 1 < k; ++i)
        path.crossings[i] = pair.ghost_crossings(path.v[i].p, path.v[i + 1].p, path.frame);
}

namespace {

double bsdf_area_pdf(const ScenePair &pair, FrameId f, const PathVertex &prev, const PathVertex &at,
                     const PathVertex &next) {
    Vec3 wi = normalize(prev.p - at.p);
    Vec3 wo = normalize(next.p - at.p);
    return bsdf_pdf(pair.material(at.prim, f), at.n, wi, wo) * solid_angle_to_area(at.p, next.p, next.n);
}

} // namespace

void compute_pdfs(const ScenePair &pair, Path &path) {
    const int k = path.size();
    const FrameId f = path.frame;
    const Camera &cam = pair.camera();
    double p_light = 1.0 / pair.surface_area(SurfaceSet::Emitter, f);
    path.pdf_fwd.assign(k, 0.0);
    path.pdf_rev.assign(k, 0.0);
    path.pdf_fwd[0] = 1;
    path.pdf_rev[0] = 1;
    if (k < 2) return;

    Vec3 w = normalize(path.v[1].p - path.v[0].p);
    if (cam.project_direction(w))
        path.pdf_fwd[1] = cam.image_direction_pdf(cam.cos_theta(w)) *
                          solid_angle_to_area(path.v[0].p, path.v[1].p, path.v[1].n);
    for (int i = 2; i <= k - 2; ++i)
        path.pdf_fwd[i] = bsdf_area_pdf(pair, f, path.v[i - 2], path.v[i - 1], path.v[i]);
    if (k >= 3) path.pdf_fwd[k - 1] = p_light;

    for (int i = 1; i <= k - 3; ++i)
        path.pdf_rev[i] = bsdf_area_pdf(pair, f, path.v[i + 2], path.v[i + 1], path.v[i]);
    path.pdf_rev[k - 1] = p_light;
}

Rgb path_contribution(const ScenePair &pair, const Path &path) {
    const int k = path.size();
    if (k < 2) return {};
    const Camera &cam = pair.camera();
    const auto &v = path.v;
    Vec3 w = normalize(v[1].p - v[0].p);
    if (!cam.project_direction(w)) return {};
    double scalar = cam.importance(cam.cos_theta(w)) * solid_angle_to_area(v[0].p, v[1].p, v[1].n);
    Rgb f(1.0);
    for (int i = 1; i <= k - 2; ++i) {
        Vec3 wi = normalize(v[i - 1].p - v[i].p);
        Vec3 wo = normalize(v[i + 1].p - v[i].p);
        f *= bsdf_eval(pair.material(v[i].prim, path.frame), v[i].n, wi, wo);
        scalar *= geometric_term(v[i].p, v[i].n, v[i + 1].p, v[i + 1].n);
        if (f.is_black()) return {};
    }
    f *= pair.emitted(v[k - 1].prim, normalize(v[k - 2].p - v[k - 1].p));
    return f * scalar;
}

bool path_valid(const ScenePair &pair, const Path &path) {
    const int k = path.size();
    if (k < 2) return false;
    if (!pair.camera().project(path.v[1].p)) return false;
    if (!pair.is_emitter(path.v[k - 1].prim)) return false;
    for (int i = 1; i < k; ++i)
        if (!pair.solid(path.v[i].prim, path.frame)) return false;
    for (int i = 0; i + 1 < k; ++i)
        if (!pair.visible(path.v[i].p, path.v[i].prim, path.v[i + 1].p, path.v[i + 1].prim, path.frame))
            return false;
    return true;
}

std::string path_form(const Path &path) {
    std::string s;
    const int k = path.size();
    for (int i = 0; i < k; ++i) {
        if (i == 0) s += "E";
        else if (i == k - 1) s += " L";
        else s += path.v[i].dynamic ? " D" : " S";
        if (i + 1 < k) {
            size_t n = i < int(path.crossings.size()) ? path.crossings[i].size() : 0;
            s += n == 0 ? " -" : fmt::format(" ={}", n);
        }
    }
    return s;
}

} // namespace resid
