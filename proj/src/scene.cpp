// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#include "resid/scene.h"

#include <algorithm>

#include <fmt/format.h>

#include "resid/error.h"

namespace resid {

int Scene::find_object(const std::string &name) const {
    for (size_t i = 0; i < objects.size(); ++i)
        if (objects[i].name == name) return int(i);
    return -1;
}

int Scene::find_material(const std::string &name) const {
    for (size_t i = 0; i < materials.size(); ++i)
        if (materials[i].name == name) return int(i);
    return -1;
}

double geometric_term(const Vec3 &x, const Vec3 &nx, const Vec3 &y, const Vec3 &ny) {
    Vec3 d = y - x;
    double d2 = length_squared(d);
    double inv = 1.0 / std::sqrt(d2);
    return std::abs(dot(nx, d) * inv) * std::abs(dot(ny, d) * inv) / d2;
}

namespace {

void validate_rotation(const Mat3 &r, int edit) {
    Mat3 rtr = r.transposed() * r;
    double err = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) err = std::max(err, std::abs(rtr.m[i][j] - (i == j ? 1.0 : 0.0)));
    if (err >= 1e-9)
        throw ValidationError(fmt::format("edits[{}].transform.rotation: not orthonormal (|RtR - I| = {:.3g})", edit, err));
    if (r.determinant() <= 0)
        throw ValidationError(fmt::format("edits[{}].transform.rotation: reflections are not rigid motions", edit));
}

} // namespace

ScenePair::ScenePair(Scene base, std::vector<Edit> edits) : base_(std::move(base)) {
    const int nobj = int(base_.objects.size());
    const int nmat = int(base_.materials.size());
    if (base_.camera.width() <= 0 || base_.camera.height() <= 0)
        throw ValidationError("camera: resolution must be positive");
    for (int o = 0; o < nobj; ++o) {
        const SceneObject &obj = base_.objects[o];
        if (obj.material < 0 || obj.material >= nmat)
            throw ValidationError(fmt::format("geometry '{}': unknown material", obj.name));
        for (size_t t = 0; t < obj.triangles.size(); ++t) {
            const auto &v = obj.triangles[t];
            if (length(cross(v[1] - v[0], v[2] - v[0])) <= 0)
                throw ValidationError(fmt::format("geometry '{}': triangle {} has zero area", obj.name, t));
        }
    }
    for (const Material &m : base_.materials) {
        if (m.albedo.r < 0 || m.albedo.g < 0 || m.albedo.b < 0 || m.albedo.max_component() > 1)
            throw ValidationError(fmt::format("material '{}': albedo must lie in [0, 1]", m.name));
        if (m.type == MaterialType::Ggx && !(m.roughness > 0 && m.roughness <= 1))
            throw ValidationError(fmt::format("material '{}': roughness must lie in (0, 1]", m.name));
    }
    std::vector<int> emitter_of(nobj, -1);
    for (size_t e = 0; e < base_.emitters.size(); ++e) {
        const Emitter &em = base_.emitters[e];
        if (em.object < 0 || em.object >= nobj)
            throw ValidationError(fmt::format("emitters[{}]: unknown object", e));
        if (em.radiance.r < 0 || em.radiance.g < 0 || em.radiance.b < 0)
            throw ValidationError(fmt::format("emitters[{}]: radiance must be non-negative", e));
        emitter_of[em.object] = int(e);
    }

    // Merge and normalize edits per object; no-op edits leave the object static.
    std::vector<std::optional<RigidTransform>> xf(nobj);
    std::vector<std::optional<int>> mat(nobj);
    for (size_t i = 0; i < edits.size(); ++i) {
        const Edit &e = edits[i];
        if (e.object < 0 || e.object >= nobj)
            throw ValidationError(fmt::format("edits[{}].object: unknown object", i));
        if (emitter_of[e.object] >= 0)
            throw ValidationError(fmt::format("edits[{}]: emitters must stay static", i));
        if (e.transform) {
            if (xf[e.object]) throw ValidationError(fmt::format("edits[{}]: object already has a transform", i));
            validate_rotation(e.transform->rotation, int(i));
            if (!e.transform->is_identity()) xf[e.object] = e.transform;
        }
        if (e.material) {
            if (mat[e.object]) throw ValidationError(fmt::format("edits[{}]: object already has a material override", i));
            if (*e.material < 0 || *e.material >= nmat)
                throw ValidationError(fmt::format("edits[{}].material: unknown material", i));
            if (!(base_.materials[*e.material] == base_.materials[base_.objects[e.object].material]))
                mat[e.object] = e.material;
        }
    }
    for (int o = 0; o < nobj; ++o)
        if (xf[o] || mat[o]) edits_.push_back({o, xf[o], mat[o]});

    materials_ = base_.materials;
    camera_ = base_.camera;
    to_new_.assign(nobj, RigidTransform{});
    for (int o = 0; o < nobj; ++o) {
        int m_old = base_.objects[o].material;
        int m_new = mat[o].value_or(m_old);
        if (xf[o]) {
            to_new_[o] = *xf[o];
            int first_old = int(tris_.size());
            add_object_instances(o, nullptr, frame_bit(FrameId::Old), true, true, m_old, m_old);
            int first_new = int(tris_.size());
            add_object_instances(o, &*xf[o], frame_bit(FrameId::New), true, true, m_new, m_new);
            for (int k = 0; k < first_new - first_old; ++k) {
                tris_[first_old + k].twin = first_new + k;
                tris_[first_new + k].twin = first_old + k;
            }
        } else {
            uint8_t both = frame_bit(FrameId::Old) | frame_bit(FrameId::New);
            add_object_instances(o, nullptr, both, bool(mat[o]), false, m_old, m_new);
        }
        if (emitter_of[o] >= 0)
            for (Triangle &t : tris_)
                if (t.object == o) t.emitter = emitter_of[o];
    }
    if (tris_.empty()) throw ValidationError("geometry: scene has no triangles");

    Vec3 lo{Infinity, Infinity, Infinity}, hi = -lo;
    for (const Triangle &t : tris_) {
        lo = min(lo, min(t.p0, min(t.p1(), t.p2())));
        hi = max(hi, max(t.p0, max(t.p1(), t.p2())));
    }
    diagonal_ = length(hi - lo);
    epsilon_ = 1e-4 * diagonal_;

    std::vector<int> all, dyn, moved;
    for (int i = 0; i < int(tris_.size()); ++i) {
        const Triangle &t = tris_[i];
        all.push_back(i);
        if (t.dynamic) dyn.push_back(i);
        if (t.moved) moved.push_back(i);
        for (FrameId f : {FrameId::Old, FrameId::New}) {
            bool in_f = t.presence & frame_bit(f);
            auto add = [&](SurfaceSet s) {
                AreaSet &set = sets_[set_index(s, f)];
                set.total += t.area;
                set.prims.push_back(i);
                set.cdf.push_back(set.total);
            };
            if (t.dynamic && in_f) add(SurfaceSet::Dynamic);
            if (t.moved && !in_f) add(SurfaceSet::Ghost);
            if (t.emitter >= 0) add(SurfaceSet::Emitter);
        }
    }
    has_dynamic_ = !dyn.empty();
    has_ghosts_ = !moved.empty();
    full_ = Bvh(&tris_, all);
    dynamic_ = Bvh(&tris_, dyn);
    ghost_ = Bvh(&tris_, moved);
}

void ScenePair::add_object_instances(int object, const RigidTransform *xf, uint8_t presence,
                                     bool dynamic, bool moved, int mat_old, int mat_new) {
    for (const auto &v : base_.objects[object].triangles) {
        Vec3 a = v[0], b = v[1], c = v[2];
        if (xf) {
            a = xf->apply(a);
            b = xf->apply(b);
            c = xf->apply(c);
        }
        Triangle t;
        t.p0 = a;
        t.e1 = b - a;
        t.e2 = c - a;
        Vec3 cr = cross(t.e1, t.e2);
        t.area = 0.5 * length(cr);
        t.n = normalize(cr);
        t.object = object;
        t.presence = presence;
        t.dynamic = dynamic;
        t.moved = moved;
        t.material[int(FrameId::Old)] = mat_old;
        t.material[int(FrameId::New)] = mat_new;
        tris_.push_back(t);
    }
}

Rgb ScenePair::emitted(int prim, const Vec3 &w) const {
    const Triangle &t = tris_[prim];
    if (t.emitter < 0 || dot(t.n, w) <= 0) return {};
    return base_.emitters[t.emitter].radiance;
}

HitRecord ScenePair::make_hit(int prim, const Vec3 &p, double t, FrameId view) const {
    const Triangle &tri = tris_[prim];
    HitRecord h;
    h.p = p;
    h.n = tri.n;
    h.ns = tri.n;
    h.t = t;
    h.prim = prim;
    h.material = tri.material[int(view)];
    h.dynamic = tri.dynamic;
    return h;
}

std::optional<HitRecord> ScenePair::intersect(const Ray &ray, FrameId view, int exclude) const {
    counters_.rays.fetch_add(1, std::memory_order_relaxed);
    TriangleHit hit = full_.closest(ray, epsilon_, Infinity, frame_bit(view), exclude);
    if (hit.prim < 0) return std::nullopt;
    return make_hit(hit.prim, ray.o + ray.d * hit.t, hit.t, view);
}

bool ScenePair::visible(const Vec3 &a, int prim_a, const Vec3 &b, int prim_b, FrameId view) const {
    counters_.rays.fetch_add(1, std::memory_order_relaxed);
    Vec3 d = b - a;
    double dist = length(d);
    // Matches the walk, which accepts any hit beyond epsilon.
    if (dist <= epsilon_) return false;
    return !full_.any({a, d / dist}, epsilon_, dist - epsilon_, frame_bit(view), prim_a, prim_b);
}

bool ScenePair::dynamic_blocks(const Vec3 &a, int prim_a, const Vec3 &b, int prim_b, FrameId view) const {
    if (dynamic_.empty()) return false;
    counters_.rays.fetch_add(1, std::memory_order_relaxed);
    Vec3 d = b - a;
    double dist = length(d);
    return dynamic_.any({a, d / dist}, epsilon_, dist - epsilon_, frame_bit(view), prim_a, prim_b);
}

std::vector<GhostCrossing> ScenePair::ghost_crossings(const Vec3 &a, const Vec3 &b, FrameId f) const {
    std::vector<GhostCrossing> out;
    if (ghost_.empty()) return out;
    counters_.crossing_queries.fetch_add(1, std::memory_order_relaxed);
    Vec3 d = b - a;
    double dist = length(d);
    Vec3 dir = d / dist;
    thread_local std::vector<TriangleHit> hits;
    hits.clear();
    ghost_.all({a, dir}, epsilon_, dist - epsilon_, frame_bit(other(f)), hits);
    std::sort(hits.begin(), hits.end(), [](const TriangleHit &x, const TriangleHit &y) {
        return x.t < y.t || (x.t == y.t && x.prim < y.prim);
    });
    const double merge = 1e-6 * diagonal_;
    for (const TriangleHit &h : hits) {
        if (!out.empty() && h.t - out.back().t < merge) continue; // seam between ghost triangles
        out.push_back({a + dir * h.t, tris_[h.prim].n, h.prim, h.t});
    }
    return out;
}

SurfaceSample ScenePair::sample_surface(SurfaceSet set, FrameId f, Vec2 u) const {
    const AreaSet &s = sets_[set_index(set, f)];
    if (s.total <= 0) throw StructuralError("sample_surface: surface set is empty");
    double target = u.x * s.total;
    size_t i = std::upper_bound(s.cdf.begin(), s.cdf.end(), target) - s.cdf.begin();
    i = std::min(i, s.cdf.size() - 1);
    double lo = i == 0 ? 0.0 : s.cdf[i - 1];
    double ux = std::clamp((target - lo) / (s.cdf[i] - lo), 0.0, 1.0);
    const Triangle &t = tris_[s.prims[i]];
    double su = std::sqrt(ux);
    double b1 = 1 - su, b2 = u.y * su;
    return {t.p0 + t.e1 * b1 + t.e2 * b2, t.n, s.prims[i], 1.0 / s.total};
}

Vec3 ScenePair::map_to_twin(int prim, const Vec3 &p) const {
    const Triangle &t = tris_[prim];
    const RigidTransform &xf = to_new_[t.object];
    return t.presence == frame_bit(FrameId::Old) ? xf.apply(p) : xf.inverse().apply(p);
}

Vec3 ScenePair::map_direction_to_twin(int prim, const Vec3 &d) const {
    const Triangle &t = tris_[prim];
    const RigidTransform &xf = to_new_[t.object];
    return t.presence == frame_bit(FrameId::Old) ? xf.apply_direction(d)
                                                 : xf.inverse().apply_direction(d);
}

} // namespace resid
