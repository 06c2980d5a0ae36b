// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#include "resid/techniques.h"

#include <cctype>
#include <cmath>

#include "resid/error.h"
#include "resid/mis.h"

namespace resid {

const char *technique_name(TechniqueId t) {
    switch (t) {
    case TechniqueId::DynFromEmitter: return "dyn-from-emitter";
    case TechniqueId::DynFromSensor: return "dyn-from-sensor";
    case TechniqueId::DynTwoEnds: return "dyn-two-ends";
    case TechniqueId::GhostFromEmitter: return "ghost-from-emitter";
    case TechniqueId::GhostFromSensor: return "ghost-from-sensor";
    case TechniqueId::GhostTwoEnds: return "ghost-two-ends";
    case TechniqueId::PtRejected: return "pt-rejected";
    }
    return "unknown";
}

TechniqueMask TechniqueMask::parse(const std::string &text) {
    TechniqueMask m;
    m.bits = 0;
    for (char c : text) {
        if (c == ',' || c == ' ') continue;
        if (c < '1' || c > '7')
            throw ValidationError("technique list '" + text + "': expected digits 1-7");
        m.bits |= uint8_t(1u << (c - '1'));
    }
    if (m.bits == 0) throw ValidationError("technique list is empty");
    return m;
}

std::string TechniqueMask::to_string() const {
    std::string s;
    for (TechniqueId t : AllTechniques)
        if (has(t)) s += char('0' + int(t));
    return s;
}

double ghost_first_hit_factor(const Vec3 &c, const Vec3 &n_c, const Vec3 &origin, const Vec3 &x1,
                              const Vec3 &n1) {
    Vec3 dc = c - origin;
    double dc2 = length_squared(dc);
    double cos_c = std::abs(dot(n_c, dc)) / std::sqrt(dc2);
    if (cos_c == 0) return 0;
    return dc2 / cos_c * solid_angle_to_area(origin, x1, n1);
}

double ghost_two_ends_density(const Vec3 &c, const Vec3 &n_c, const Vec3 &x1, const Vec3 &n1,
                              const Vec3 &x2, const Vec3 &n2) {
    Vec3 d = x2 - x1;
    double d2 = length_squared(d);
    Vec3 w = d / std::sqrt(d2);
    double cos_c = std::abs(dot(n_c, w));
    if (cos_c == 0) return 0;
    (void)c;
    return Inv4Pi * std::abs(dot(n1, w)) * std::abs(dot(n2, w)) / (cos_c * d2);
}

namespace {

PathVertex vertex_of(const HitRecord &h, Vec2 u = {-1, -1}) { return {h.p, h.n, h.prim, h.dynamic, u}; }
PathVertex vertex_of(const ScenePair &pair, const SurfaceSample &s) {
    return {s.p, s.n, s.prim, pair.triangle(s.prim).dynamic, {-1, -1}};
}
PathVertex camera_vertex(const ScenePair &pair) { return {pair.camera().position(), {}, -1, false, {-1, -1}}; }

// Edges that graze a surface have zero geometric term and a zero density in
// some direction; they form a null set and are skipped by every generator.
bool grazing(const Vec3 &a, const Vec3 &na, const Vec3 &b, const Vec3 &nb) {
    Vec3 d = b - a;
    return dot(na, d) == 0 || dot(nb, d) == 0;
}

struct WalkNode {
    PathVertex v;
    double pdf = 1; // area density of this node given its walk predecessor
};

// Extends a BSDF-sampled walk until it holds `max_nodes` nodes or terminates.
// `from` is the point the walk arrived at walk[0] from.
void extend_walk(const SamplingContext &ctx, std::vector<WalkNode> &walk, const Vec3 &from,
                 size_t max_nodes, Sampler &s) {
    const ScenePair &pair = ctx.pair;
    while (walk.size() < max_nodes) {
        const PathVertex cur = walk.back().v;
        Vec3 prev = walk.size() >= 2 ? walk[walk.size() - 2].v.p : from;
        Vec3 wi = normalize(prev - cur.p);
        Vec2 u = s.next2();
        auto bs = bsdf_sample(pair.material(cur.prim, ctx.frame), cur.n, wi, u);
        if (!bs) return;
        auto hit = pair.intersect({cur.p, bs->wo}, ctx.frame, cur.prim);
        if (!hit || grazing(cur.p, cur.n, hit->p, hit->n)) return;
        walk.push_back({vertex_of(*hit, u), bs->pdf * solid_angle_to_area(cur.p, hit->p, hit->n)});
    }
}

std::optional<PathVertex> sample_light(const SamplingContext &ctx, const PathVertex &at, Sampler &s) {
    SurfaceSample ls = ctx.pair.sample_surface(SurfaceSet::Emitter, ctx.frame, s.next2());
    if (ls.prim == at.prim || grazing(at.p, at.n, ls.p, ls.n)) return std::nullopt;
    if (!ctx.pair.visible(at.p, at.prim, ls.p, ls.prim, ctx.frame)) return std::nullopt;
    return vertex_of(ctx.pair, ls);
}

std::optional<Vec2> connect_camera(const SamplingContext &ctx, const PathVertex &at) {
    const ScenePair &pair = ctx.pair;
    auto raster = pair.camera().project(at.p);
    if (!raster) return std::nullopt;
    if (dot(at.n, pair.camera().position() - at.p) == 0) return std::nullopt;
    if (!pair.visible(pair.camera().position(), -1, at.p, at.prim, ctx.frame)) return std::nullopt;
    return raster;
}

double walk_pdf(const std::vector<WalkNode> &walk, size_t last) {
    double p = 1;
    for (size_t m = 1; m <= last; ++m) p *= walk[m].pdf;
    return p;
}

// Completes crossings, pdf records and the contribution of an assembled path.
// For ghost starts, locates the crossing on `edge` at the sampled point.
void emit(const SamplingContext &ctx, TechniqueResult &out, std::vector<PathVertex> verts,
          TechniqueId technique, StartElement start, double pdf, Vec2 raster,
          const GhostCrossing *ghost = nullptr) {
    if (!(pdf > 0) || !std::isfinite(pdf)) return;
    TechniqueSample t;
    t.path.frame = ctx.frame;
    t.path.v = std::move(verts);
    t.path.pixel = raster;
    compute_crossings(ctx.pair, t.path);
    if (ghost) {
        const auto &cs = t.path.crossings[start.edge];
        const double tol = 1e-6 * ctx.pair.diagonal();
        for (int c = 0; c < int(cs.size()); ++c)
            if (cs[c].prim == ghost->prim && length(cs[c].p - ghost->p) < tol) start.crossing = c;
        if (start.crossing < 0) return; // sampled point fell in a merged seam
    }
    compute_pdfs(ctx.pair, t.path);
    t.technique = technique;
    t.start = start;
    t.pixel = raster;
    t.pdf = pdf;
    t.contribution = path_contribution(ctx.pair, t.path) / pdf;
    out.samples.push_back(std::move(t));
}

bool surface_set_empty(const SamplingContext &ctx, SurfaceSet s) {
    return !(ctx.pair.surface_area(s, ctx.frame) > 0);
}

} // namespace

TechniqueResult sample_dyn_from_emitter(const SamplingContext &ctx, Sampler &s) {
    TechniqueResult out;
    if (surface_set_empty(ctx, SurfaceSet::Dynamic) || ctx.max_vertices < 3) return out;
    const ScenePair &pair = ctx.pair;
    SurfaceSample xd = pair.sample_surface(SurfaceSet::Dynamic, ctx.frame, s.next2());
    SurfaceSample xl = pair.sample_surface(SurfaceSet::Emitter, ctx.frame, s.next2());
    if (xd.prim == xl.prim || grazing(xd.p, xd.n, xl.p, xl.n)) return out;
    if (!pair.visible(xd.p, xd.prim, xl.p, xl.prim, ctx.frame)) return out;
    out.started = true;

    std::vector<WalkNode> walk{{vertex_of(pair, xd), 1}};
    extend_walk(ctx, walk, xl.p, size_t(ctx.max_vertices - 2), s);
    const PathVertex light = vertex_of(pair, xl);
    for (size_t j = 0; j < walk.size(); ++j) {
        auto raster = connect_camera(ctx, walk[j].v);
        if (!raster) continue;
        std::vector<PathVertex> v{camera_vertex(pair)};
        for (size_t m = j + 1; m-- > 0;) v.push_back(walk[m].v);
        v.push_back(light);
        int k = int(v.size());
        emit(ctx, out, std::move(v), TechniqueId::DynFromEmitter, {k - 2, -1, -1},
             xd.pdf * xl.pdf * walk_pdf(walk, j), *raster);
    }
    return out;
}

TechniqueResult sample_dyn_from_sensor(const SamplingContext &ctx, Sampler &s) {
    TechniqueResult out;
    if (surface_set_empty(ctx, SurfaceSet::Dynamic) || ctx.max_vertices < 4) return out;
    const ScenePair &pair = ctx.pair;
    SurfaceSample xd = pair.sample_surface(SurfaceSet::Dynamic, ctx.frame, s.next2());
    PathVertex x1 = vertex_of(pair, xd);
    auto raster = connect_camera(ctx, x1);
    if (!raster) return out;
    out.started = true;

    std::vector<WalkNode> walk{{x1, 1}};
    extend_walk(ctx, walk, pair.camera().position(), size_t(ctx.max_vertices - 2), s);
    for (size_t j = 1; j < walk.size(); ++j) {
        auto light = sample_light(ctx, walk[j].v, s);
        if (!light) continue;
        std::vector<PathVertex> v{camera_vertex(pair)};
        for (size_t m = 0; m <= j; ++m) v.push_back(walk[m].v);
        v.push_back(*light);
        double p_light = 1.0 / pair.surface_area(SurfaceSet::Emitter, ctx.frame);
        emit(ctx, out, std::move(v), TechniqueId::DynFromSensor, {1, -1, -1},
             xd.pdf * walk_pdf(walk, j) * p_light, *raster);
    }
    return out;
}

TechniqueResult sample_dyn_two_ends(const SamplingContext &ctx, Sampler &s) {
    TechniqueResult out;
    if (surface_set_empty(ctx, SurfaceSet::Dynamic) || ctx.max_vertices < 5) return out;
    const ScenePair &pair = ctx.pair;
    SurfaceSample xd = pair.sample_surface(SurfaceSet::Dynamic, ctx.frame, s.next2());
    const PathVertex d = vertex_of(pair, xd);

    // Emitter side: cosine lobe about the front normal.
    Vec2 ue = s.next2();
    Vec3 we = sample_cosine_hemisphere(d.n, ue);
    auto y1 = pair.intersect({d.p, we}, ctx.frame, d.prim);
    if (!y1 || grazing(d.p, d.n, y1->p, y1->n)) return out;
    // Sensor side: BSDF sampling with the emitter-side direction as incident.
    Vec2 us = s.next2();
    auto bs = bsdf_sample(pair.material(d.prim, ctx.frame), d.n, we, us);
    if (!bs) return out;
    auto z1 = pair.intersect({d.p, bs->wo}, ctx.frame, d.prim);
    if (!z1 || grazing(d.p, d.n, z1->p, z1->n)) return out;
    out.started = true;

    const size_t side_nodes = size_t(ctx.max_vertices - 3);
    std::vector<WalkNode> ew{{d, 1}, {vertex_of(*y1, ue), cosine_hemisphere_pdf(d.n, we) *
                                                               solid_angle_to_area(d.p, y1->p, y1->n)}};
    std::vector<WalkNode> sw{{d, 1}, {vertex_of(*z1, us), bs->pdf * solid_angle_to_area(d.p, z1->p, z1->n)}};
    extend_walk(ctx, ew, d.p, side_nodes, s);
    extend_walk(ctx, sw, d.p, side_nodes, s);

    std::vector<std::optional<PathVertex>> lights(ew.size());
    for (size_t a = 1; a < ew.size(); ++a) lights[a] = sample_light(ctx, ew[a].v, s);
    std::vector<std::optional<Vec2>> rasters(sw.size());
    for (size_t b = 1; b < sw.size(); ++b) rasters[b] = connect_camera(ctx, sw[b].v);

    const double p_light = 1.0 / pair.surface_area(SurfaceSet::Emitter, ctx.frame);
    for (size_t b = 1; b < sw.size(); ++b) {
        if (!rasters[b]) continue;
        for (size_t a = 1; a < ew.size(); ++a) {
            if (!lights[a] || int(a + b) > ctx.max_vertices - 3) continue;
            std::vector<PathVertex> v{camera_vertex(pair)};
            for (size_t m = b + 1; m-- > 1;) v.push_back(sw[m].v);
            v.push_back(d);
            for (size_t m = 1; m <= a; ++m) v.push_back(ew[m].v);
            v.push_back(*lights[a]);
            double pdf = xd.pdf * walk_pdf(ew, a) * p_light * walk_pdf(sw, b);
            emit(ctx, out, std::move(v), TechniqueId::DynTwoEnds, {int(b) + 1, -1, -1}, pdf, *rasters[b]);
        }
    }
    return out;
}

TechniqueResult sample_ghost_from_emitter(const SamplingContext &ctx, Sampler &s) {
    TechniqueResult out;
    if (surface_set_empty(ctx, SurfaceSet::Ghost) || ctx.max_vertices < 3) return out;
    const ScenePair &pair = ctx.pair;
    const double eps = pair.ray_epsilon();
    SurfaceSample xg = pair.sample_surface(SurfaceSet::Ghost, ctx.frame, s.next2());
    SurfaceSample xl = pair.sample_surface(SurfaceSet::Emitter, ctx.frame, s.next2());
    Vec3 dg = xg.p - xl.p;
    double dist = length(dg);
    if (dist <= eps) return out;
    auto hit = pair.intersect({xl.p, dg / dist}, ctx.frame, xl.prim);
    if (!hit || hit->t <= dist + eps || grazing(xl.p, xl.n, hit->p, hit->n)) return out;
    double factor = ghost_first_hit_factor(xg.p, xg.n, xl.p, hit->p, hit->n);
    if (!(factor > 0)) return out;
    out.started = true;

    const GhostCrossing ghost{xg.p, xg.n, xg.prim, 0};
    std::vector<WalkNode> walk{{vertex_of(*hit), 1}};
    extend_walk(ctx, walk, xl.p, size_t(ctx.max_vertices - 2), s);
    const PathVertex light = vertex_of(pair, xl);
    for (size_t j = 0; j < walk.size(); ++j) {
        auto raster = connect_camera(ctx, walk[j].v);
        if (!raster) continue;
        std::vector<PathVertex> v{camera_vertex(pair)};
        for (size_t m = j + 1; m-- > 0;) v.push_back(walk[m].v);
        v.push_back(light);
        int k = int(v.size());
        emit(ctx, out, std::move(v), TechniqueId::GhostFromEmitter, {-1, k - 2, -1},
             xl.pdf * xg.pdf * factor * walk_pdf(walk, j), *raster, &ghost);
    }
    return out;
}

TechniqueResult sample_ghost_from_sensor(const SamplingContext &ctx, Sampler &s) {
    TechniqueResult out;
    if (surface_set_empty(ctx, SurfaceSet::Ghost) || ctx.max_vertices < 3) return out;
    const ScenePair &pair = ctx.pair;
    const Vec3 eye = pair.camera().position();
    const double eps = pair.ray_epsilon();
    SurfaceSample xg = pair.sample_surface(SurfaceSet::Ghost, ctx.frame, s.next2());
    auto raster = pair.camera().project(xg.p);
    if (!raster) return out;
    Vec3 dg = xg.p - eye;
    double dist = length(dg);
    auto hit = pair.intersect({eye, dg / dist}, ctx.frame);
    if (!hit || hit->t <= dist + eps || dot(hit->n, hit->p - eye) == 0) return out;
    double factor = ghost_first_hit_factor(xg.p, xg.n, eye, hit->p, hit->n);
    if (!(factor > 0)) return out;
    out.started = true;

    const GhostCrossing ghost{xg.p, xg.n, xg.prim, 0};
    const double p_light = 1.0 / pair.surface_area(SurfaceSet::Emitter, ctx.frame);
    std::vector<WalkNode> walk{{vertex_of(*hit), 1}};
    extend_walk(ctx, walk, eye, size_t(ctx.max_vertices - 2), s);
    for (size_t j = 0; j < walk.size(); ++j) {
        auto light = sample_light(ctx, walk[j].v, s);
        if (!light) continue;
        std::vector<PathVertex> v{camera_vertex(pair)};
        for (size_t m = 0; m <= j; ++m) v.push_back(walk[m].v);
        v.push_back(*light);
        emit(ctx, out, std::move(v), TechniqueId::GhostFromSensor, {-1, 0, -1},
             xg.pdf * factor * walk_pdf(walk, j) * p_light, *raster, &ghost);
    }
    return out;
}

TechniqueResult sample_ghost_two_ends(const SamplingContext &ctx, Sampler &s) {
    TechniqueResult out;
    if (surface_set_empty(ctx, SurfaceSet::Ghost) || ctx.max_vertices < 4) return out;
    const ScenePair &pair = ctx.pair;
    SurfaceSample xg = pair.sample_surface(SurfaceSet::Ghost, ctx.frame, s.next2());
    Vec3 w = sample_uniform_sphere(s.next2());
    auto h2 = pair.intersect({xg.p, w}, ctx.frame);
    auto h1 = pair.intersect({xg.p, -w}, ctx.frame);
    if (!h1 || !h2 || h1->prim == h2->prim || grazing(h1->p, h1->n, h2->p, h2->n)) return out;
    // A surface solid in this frame may be coplanar with the ghost at xg; both
    // rays start past it, so the joined edge must be checked as a whole.
    if (!pair.visible(h1->p, h1->prim, h2->p, h2->prim, ctx.frame)) return out;
    double g = ghost_two_ends_density(xg.p, xg.n, h1->p, h1->n, h2->p, h2->n);
    if (!(g > 0)) return out;
    out.started = true;

    const GhostCrossing ghost{xg.p, xg.n, xg.prim, 0};
    const size_t side_nodes = size_t(ctx.max_vertices - 3);
    std::vector<WalkNode> sw{{vertex_of(*h1), 1}};
    std::vector<WalkNode> ew{{vertex_of(*h2), 1}};
    extend_walk(ctx, sw, h2->p, side_nodes, s);
    extend_walk(ctx, ew, h1->p, side_nodes, s);

    std::vector<std::optional<PathVertex>> lights(ew.size());
    for (size_t a = 0; a < ew.size(); ++a) lights[a] = sample_light(ctx, ew[a].v, s);
    std::vector<std::optional<Vec2>> rasters(sw.size());
    for (size_t b = 0; b < sw.size(); ++b) rasters[b] = connect_camera(ctx, sw[b].v);

    const double p_light = 1.0 / pair.surface_area(SurfaceSet::Emitter, ctx.frame);
    for (size_t b = 0; b < sw.size(); ++b) {
        if (!rasters[b]) continue;
        for (size_t a = 0; a < ew.size(); ++a) {
            if (!lights[a] || int(a + b) > ctx.max_vertices - 4) continue;
            std::vector<PathVertex> v{camera_vertex(pair)};
            for (size_t m = b + 1; m-- > 0;) v.push_back(sw[m].v);
            for (size_t m = 0; m <= a; ++m) v.push_back(ew[m].v);
            v.push_back(*lights[a]);
            double pdf = xg.pdf * g * walk_pdf(sw, b) * walk_pdf(ew, a) * p_light;
            emit(ctx, out, std::move(v), TechniqueId::GhostTwoEnds, {-1, int(b) + 1, -1}, pdf,
                 *rasters[b], &ghost);
        }
    }
    return out;
}

TechniqueResult sample_pt_rejected(const SamplingContext &ctx, Vec2 raster_pixel, Sampler &s) {
    TechniqueResult out;
    const ScenePair &pair = ctx.pair;
    const Camera &cam = pair.camera();
    Vec2 raster = raster_pixel + s.next2();
    Vec3 w = cam.direction(raster);
    auto hit = pair.intersect({cam.position(), w}, ctx.frame);
    if (!hit || dot(hit->n, w) == 0) return out;
    out.started = true;

    const PathVertex x1 = vertex_of(*hit);
    const double p1 = cam.image_direction_pdf(cam.cos_theta(w)) *
                      solid_angle_to_area(cam.position(), x1.p, x1.n);
    auto keep_dynamic = [&](std::vector<PathVertex> v, double pdf) {
        Path probe;
        probe.frame = ctx.frame;
        probe.v = v;
        compute_crossings(pair, probe);
        if (!probe.is_dynamic()) return;
        emit(ctx, out, std::move(v), TechniqueId::PtRejected, {}, pdf, raster);
    };
    if (pair.is_emitter(x1.prim)) keep_dynamic({camera_vertex(pair), x1}, p1);
    if (ctx.max_vertices < 3) return out;

    const double p_light = 1.0 / pair.surface_area(SurfaceSet::Emitter, ctx.frame);
    std::vector<WalkNode> walk{{x1, 1}};
    extend_walk(ctx, walk, cam.position(), size_t(ctx.max_vertices - 2), s);
    for (size_t j = 0; j < walk.size(); ++j) {
        auto light = sample_light(ctx, walk[j].v, s);
        if (!light) continue;
        std::vector<PathVertex> v{camera_vertex(pair)};
        for (size_t m = 0; m <= j; ++m) v.push_back(walk[m].v);
        v.push_back(*light);
        keep_dynamic(std::move(v), p1 * walk_pdf(walk, j) * p_light);
    }
    return out;
}

TechniqueResult sample_technique(TechniqueId t, const SamplingContext &ctx, Vec2 raster_pixel,
                                 Sampler &s) {
    switch (t) {
    case TechniqueId::DynFromEmitter: return sample_dyn_from_emitter(ctx, s);
    case TechniqueId::DynFromSensor: return sample_dyn_from_sensor(ctx, s);
    case TechniqueId::DynTwoEnds: return sample_dyn_two_ends(ctx, s);
    case TechniqueId::GhostFromEmitter: return sample_ghost_from_emitter(ctx, s);
    case TechniqueId::GhostFromSensor: return sample_ghost_from_sensor(ctx, s);
    case TechniqueId::GhostTwoEnds: return sample_ghost_two_ends(ctx, s);
    case TechniqueId::PtRejected: return sample_pt_rejected(ctx, raster_pixel, s);
    }
    throw StructuralError("sample_technique: unknown technique");
}

bool matches_technique_form(const TechniqueSample &s, int max_vertices) {
    const Path &p = s.path;
    const int k = p.size();
    if (k < 2 || k > max_vertices || int(p.crossings.size()) != k - 1) return false;
    if (!p.is_dynamic()) return false;
    switch (s.technique) {
    case TechniqueId::DynFromEmitter:
    case TechniqueId::DynFromSensor:
    case TechniqueId::DynTwoEnds:
        if (!s.start.is_vertex() || s.start.vertex < 1 || s.start.vertex > k - 2) return false;
        if (!p.v[s.start.vertex].dynamic) return false;
        return technique_for_vertex(s.start.vertex, k) == s.technique;
    case TechniqueId::GhostFromEmitter:
    case TechniqueId::GhostFromSensor:
    case TechniqueId::GhostTwoEnds:
        if (k < 3 || !s.start.is_crossing() || s.start.edge > k - 2) return false;
        if (s.start.crossing < 0 || s.start.crossing >= int(p.crossings[s.start.edge].size()))
            return false;
        return technique_for_edge(s.start.edge, k) == s.technique;
    case TechniqueId::PtRejected: return !s.start.is_vertex() && !s.start.is_crossing();
    }
    return false;
}

} // namespace resid
