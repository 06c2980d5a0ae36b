// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#include "resid/mapping.h"

#include <cmath>

#include "resid/error.h"

namespace resid {

const char *reject_reason_name(RejectReason r) {
    switch (r) {
    case RejectReason::None: return "accepted";
    case RejectReason::OccludedByDynamic: return "occluded-by-dynamic";
    case RejectReason::JacobianExceedsThreshold: return "jacobian-exceeds-threshold";
    case RejectReason::MultiDynamicHit: return "multi-dynamic-hit";
    case RejectReason::ReconnectionInfeasible: return "reconnection-infeasible";
    }
    return "unknown";
}

std::optional<double> reconnection_jacobian(const Vec3 &x_prev, const Vec3 &t_prev, const Vec3 &x_i,
                                            const Vec3 &n_i) {
    Vec3 dp = x_prev - x_i, dq = t_prev - x_i;
    double lp2 = length_squared(dp), lq2 = length_squared(dq);
    if (lp2 == 0 || lq2 == 0) return std::nullopt;
    double cos_p = std::abs(dot(n_i, dp)) / std::sqrt(lp2);
    double cos_q = std::abs(dot(n_i, dq)) / std::sqrt(lq2);
    if (cos_p == 0 || cos_q == 0) return std::nullopt;
    return (cos_q / cos_p) * (lp2 / lq2);
}

namespace {

class Mapper {
  public:
    Mapper(const ScenePair &pair, const MappingConfig &cfg, const TechniqueSample &base)
        : pair_(pair), cfg_(cfg), base_(base), p_(base.path.v), k_(base.path.size()),
          fa_(base.path.frame), fb_(other(base.path.frame)) {
        q_.resize(k_);
        same_.assign(k_, 0);
        traced_.assign(std::max(0, k_ - 1), 0);
        ops_.assign(k_, VertexOp::Endpoint);
        dmin_ = cfg.distance_fraction * pair.diagonal();
        tol_ = 1e-6 * pair.diagonal();
    }

    MappingOutcome run(TechniqueMask mask) {
        MappingOutcome out;
        if (!build() || !finish(out, mask)) {
            out.reason = reason_;
            out.jacobian_dir = jdir_;
            out.jacobian_area = jarea_;
            out.ops = ops_;
        }
        return out;
    }

  private:
    // Records the rejection; always false so call sites can `return fail(...)`.
    bool fail(RejectReason r) {
        reason_ = r;
        return false;
    }

    static PathVertex from_hit(const HitRecord &h, Vec2 u = {-1, -1}) {
        return {h.p, h.n, h.prim, h.dynamic, u};
    }

    void keep(int i, VertexOp op) {
        q_[i] = p_[i];
        same_[i] = 1;
        ops_[i] = op;
    }

    void place(int i, const PathVertex &v, VertexOp op) {
        bool coincide = v.prim == p_[i].prim && distance(v.p, p_[i].p) < tol_;
        if (coincide) keep(i, op);
        else {
            q_[i] = v;
            same_[i] = 0;
            ops_[i] = op;
        }
    }

    double alpha(const PathVertex &v, FrameId f) const {
        return effective_roughness(pair_.material(v.prim, f));
    }

    // Reconnection criterion for keeping x_i when its predecessor moves from
    // a (frame fa) to b (frame fb). Symmetric in (a, b).
    bool reconnectable(const PathVertex &a, FrameId fa, const PathVertex &b, FrameId fb,
                       const PathVertex &xi) const {
        if (reconnected_ || xi.dynamic || xi.prim < 0) return false;
        if (alpha(a, fa) < cfg_.roughness_threshold || alpha(b, fb) < cfg_.roughness_threshold ||
            alpha(xi, fb) < cfg_.roughness_threshold)
            return false;
        return distance(a.p, xi.p) >= dmin_ && distance(b.p, xi.p) >= dmin_;
    }

    static double gprime(const PathVertex &from, const PathVertex &to) {
        return solid_angle_to_area(from.p, to.p, to.n);
    }

    // Vertex i generated from predecessor a, with b the vertex the walk
    // arrived at a from (or the cosine lobe about a's normal when cos_lobe).
    bool step(int i, int a, int b, bool cos_lobe = false) {
        const PathVertex &pa = p_[a], &pi = p_[i];
        const PathVertex &qa = q_[a];
        if (same_[a]) {
            auto hit = pair_.intersect({qa.p, normalize(pi.p - pa.p)}, fb_, qa.prim);
            if (!hit) return fail(RejectReason::ReconnectionInfeasible);
            PathVertex v = from_hit(*hit, pi.u);
            place(i, v, VertexOp::DirectionCopy);
            if (!same_[i]) jarea_ *= gprime(pa, pi) / gprime(qa, q_[i]);
            traced_[std::min(a, i)] = 1;
            return true;
        }
        if (reconnectable(pa, fa_, qa, fb_, pi)) {
            auto j = reconnection_jacobian(pa.p, qa.p, pi.p, pi.n);
            if (!j) return fail(RejectReason::ReconnectionInfeasible);
            jdir_ *= *j;
            keep(i, VertexOp::Reconnect);
            reconnected_ = true;
            return true;
        }
        if (pi.u.x < 0) return fail(RejectReason::ReconnectionInfeasible);
        Vec3 dir_p = normalize(pi.p - pa.p), dir_q;
        double pdf_p = 0, pdf_q = 0;
        if (cos_lobe) {
            dir_q = sample_cosine_hemisphere(qa.n, pi.u);
            pdf_q = cosine_hemisphere_pdf(qa.n, dir_q);
            pdf_p = cosine_hemisphere_pdf(pa.n, dir_p);
        } else {
            Vec3 wi_p = normalize(p_[b].p - pa.p), wi_q = normalize(q_[b].p - qa.p);
            auto bs = bsdf_sample(pair_.material(qa.prim, fb_), qa.n, wi_q, pi.u);
            if (!bs) return fail(RejectReason::ReconnectionInfeasible);
            dir_q = bs->wo;
            pdf_q = bs->pdf;
            pdf_p = bsdf_pdf(pair_.material(pa.prim, fa_), pa.n, wi_p, dir_p);
        }
        if (!(pdf_p > 0) || !(pdf_q > 0)) return fail(RejectReason::ReconnectionInfeasible);
        auto hit = pair_.intersect({qa.p, dir_q}, fb_, qa.prim);
        if (!hit || dot(hit->n, dir_q) == 0) return fail(RejectReason::ReconnectionInfeasible);
        PathVertex v = from_hit(*hit, pi.u);
        jdir_ *= pdf_p / pdf_q;
        jarea_ *= (pdf_p * gprime(pa, pi)) / (pdf_q * gprime(qa, v));
        // The inverse map would reconnect here instead of replaying.
        if (reconnectable(qa, fb_, pa, fa_, v)) return fail(RejectReason::ReconnectionInfeasible);
        place(i, v, VertexOp::Replay);
        traced_[std::min(a, i)] = 1;
        return true;
    }

    bool sensor_chain(int from) {
        for (int i = from; i >= 1; --i)
            if (!step(i, i + 1, i + 2)) return false;
        return true;
    }
    bool emitter_chain(int from) {
        for (int i = from; i <= k_ - 2; ++i)
            if (!step(i, i - 1, i - 2)) return false;
        return true;
    }

    const GhostCrossing &start_crossing() const {
        const auto &cs = base_.path.crossings.at(base_.start.edge);
        return cs.at(base_.start.crossing);
    }

    // Ghost start c is mapped to its twin c'; remembers what to look for in q.
    void map_ghost_start(const GhostCrossing &g, Vec3 &c2, Vec3 &n2) {
        const Triangle &t = pair_.triangle(g.prim);
        target_prim_ = t.twin;
        c2 = pair_.map_to_twin(g.prim, g.p);
        n2 = pair_.triangle(t.twin).n;
        target_point_ = c2;
    }

    bool build() {
        const Camera &cam = pair_.camera();
        const Vec3 eye = cam.position();
        const double eps = pair_.ray_epsilon();
        keep(0, VertexOp::Endpoint);
        keep(k_ - 1, VertexOp::Endpoint);
        technique_ = base_.technique;
        start_ = base_.start;

        switch (base_.technique) {
        case TechniqueId::DynFromEmitter:
        case TechniqueId::DynTwoEnds: {
            int d = base_.start.vertex;
            const Triangle &t = pair_.triangle(p_[d].prim);
            if (t.moved) {
                PathVertex v{pair_.map_to_twin(p_[d].prim, p_[d].p), pair_.triangle(t.twin).n, t.twin, true, {-1, -1}};
                q_[d] = v;
                ops_[d] = VertexOp::Rigid;
            } else {
                keep(d, VertexOp::Rigid);
            }
            if (base_.technique == TechniqueId::DynFromEmitter) return sensor_chain(d - 1);
            return step(d + 1, d, -1, true) && sensor_chain(d - 1) && emitter_chain(d + 2);
        }
        case TechniqueId::DynFromSensor: {
            const PathVertex &x1 = p_[1];
            const Triangle &t = pair_.triangle(x1.prim);
            if (!t.moved) {
                keep(1, VertexOp::Rigid);
            } else {
                // x1's location is a ghost point in the other frame.
                Vec3 d = x1.p - eye;
                double dist = length(d);
                auto hit = pair_.intersect({eye, d / dist}, fb_);
                if (!hit || hit->t <= dist + eps) return fail(RejectReason::ReconnectionInfeasible);
                PathVertex v = from_hit(*hit);
                double f5 = ghost_first_hit_factor(x1.p, x1.n, eye, v.p, v.n);
                if (!(f5 > 0)) return fail(RejectReason::ReconnectionInfeasible);
                jarea_ *= 1.0 / f5;
                q_[1] = v;
                ops_[1] = VertexOp::PairMap;
                traced_[0] = 1;
                technique_ = TechniqueId::GhostFromSensor;
                start_ = {-1, 0, -1};
                target_prim_ = x1.prim;
                target_point_ = x1.p;
            }
            return emitter_chain(2);
        }
        case TechniqueId::GhostFromSensor: {
            const GhostCrossing &g = start_crossing();
            Vec3 d = g.p - eye;
            double dist = length(d);
            auto hit = pair_.intersect({eye, d / dist}, fb_);
            if (!hit || hit->prim != g.prim || std::abs(hit->t - dist) > tol_)
                return fail(RejectReason::ReconnectionInfeasible);
            PathVertex v = from_hit(*hit);
            double f5 = ghost_first_hit_factor(g.p, g.n, eye, p_[1].p, p_[1].n);
            if (!(f5 > 0)) return fail(RejectReason::ReconnectionInfeasible);
            jarea_ *= f5;
            q_[1] = v;
            ops_[1] = VertexOp::PairMap;
            traced_[0] = 1;
            technique_ = TechniqueId::DynFromSensor;
            start_ = {1, -1, -1};
            return emitter_chain(2);
        }
        case TechniqueId::GhostFromEmitter: {
            const GhostCrossing &g = start_crossing();
            Vec3 c2, n2;
            map_ghost_start(g, c2, n2);
            const PathVertex &xl = p_[k_ - 1];
            Vec3 d = c2 - xl.p;
            double dist = length(d);
            auto hit = pair_.intersect({xl.p, d / dist}, fb_, xl.prim);
            if (!hit || hit->t <= dist + eps) return fail(RejectReason::ReconnectionInfeasible);
            PathVertex v = from_hit(*hit);
            double fa = ghost_first_hit_factor(g.p, g.n, xl.p, p_[k_ - 2].p, p_[k_ - 2].n);
            double fb = ghost_first_hit_factor(c2, n2, xl.p, v.p, v.n);
            if (!(fa > 0) || !(fb > 0)) return fail(RejectReason::ReconnectionInfeasible);
            jarea_ *= fa / fb;
            place(k_ - 2, v, VertexOp::GhostRay);
            traced_[k_ - 2] = 1;
            start_ = {-1, k_ - 2, -1};
            return sensor_chain(k_ - 3);
        }
        case TechniqueId::GhostTwoEnds: {
            const GhostCrossing &g = start_crossing();
            const int e = base_.start.edge;
            Vec3 c2, n2;
            map_ghost_start(g, c2, n2);
            Vec3 w = pair_.map_direction_to_twin(g.prim, normalize(p_[e + 1].p - p_[e].p));
            auto h2 = pair_.intersect({c2, w}, fb_);
            auto h1 = pair_.intersect({c2, -w}, fb_);
            if (!h1 || !h2) return fail(RejectReason::ReconnectionInfeasible);
            PathVertex v1 = from_hit(*h1), v2 = from_hit(*h2);
            // As in the sampler: a surface coplanar with the twin ghost point
            // is skipped by both rays, so check the joined edge.
            if (!pair_.visible(v1.p, v1.prim, v2.p, v2.prim, fb_))
                return fail(pair_.dynamic_blocks(v1.p, v1.prim, v2.p, v2.prim, fb_) ? RejectReason::OccludedByDynamic
                                                                            : RejectReason::ReconnectionInfeasible);
            double ga = ghost_two_ends_density(g.p, g.n, p_[e].p, p_[e].n, p_[e + 1].p, p_[e + 1].n);
            double gb = ghost_two_ends_density(c2, n2, v1.p, v1.n, v2.p, v2.n);
            if (!(ga > 0) || !(gb > 0)) return fail(RejectReason::ReconnectionInfeasible);
            jarea_ *= ga / gb;
            place(e, v1, VertexOp::GhostRay);
            place(e + 1, v2, VertexOp::GhostRay);
            traced_[e] = 1;
            start_ = {-1, e, -1};
            return sensor_chain(e - 1) && emitter_chain(e + 2);
        }
        case TechniqueId::PtRejected: {
            Vec3 w = normalize(p_[1].p - eye);
            auto hit = pair_.intersect({eye, w}, fb_);
            if (!hit) return fail(RejectReason::ReconnectionInfeasible);
            PathVertex v = from_hit(*hit);
            place(1, v, VertexOp::DirectionCopy);
            if (!same_[1]) jarea_ *= gprime(p_[0], p_[1]) / gprime(p_[0], v);
            traced_[0] = 1;
            if (k_ == 2) return pair_.is_emitter(q_[1].prim) || fail(RejectReason::ReconnectionInfeasible);
            return emitter_chain(2);
        }
        }
        return fail(RejectReason::ReconnectionInfeasible);
    }

    bool finish(MappingOutcome &out, TechniqueMask mask) {
        Path &qp = out.path;
        qp.frame = fb_;
        qp.v = q_;
        const Camera &cam = pair_.camera();
        auto raster = cam.project(q_[1].p);
        if (!raster) return fail(RejectReason::ReconnectionInfeasible);
        qp.pixel = *raster;

        for (int i = 0; i + 1 < k_; ++i) {
            if (traced_[i]) continue;
            const PathVertex &a = q_[i], &b = q_[i + 1];
            if (same_[i] && same_[i + 1]) {
                if (pair_.dynamic_blocks(a.p, a.prim, b.p, b.prim, fb_)) return fail(RejectReason::OccludedByDynamic);
            } else if (!pair_.visible(a.p, a.prim, b.p, b.prim, fb_)) {
                return fail(pair_.dynamic_blocks(a.p, a.prim, b.p, b.prim, fb_) ? RejectReason::OccludedByDynamic
                                                                         : RejectReason::ReconnectionInfeasible);
            }
        }
        bool diverged = false;
        for (int i = 0; i < k_; ++i) diverged |= !same_[i];
        compute_crossings(pair_, qp);
        if (diverged && (base_.path.dynamic_vertex_count() > 1 || qp.dynamic_vertex_count() > 1))
            return fail(RejectReason::MultiDynamicHit);
        const double t = cfg_.jacobian_threshold;
        if (!(jdir_ <= t && jdir_ >= 1.0 / t)) return fail(RejectReason::JacobianExceedsThreshold);
        if (!(jarea_ > 0) || !std::isfinite(jarea_)) return fail(RejectReason::ReconnectionInfeasible);
        if (!qp.is_dynamic()) return fail(RejectReason::ReconnectionInfeasible);

        if (start_.edge >= 0) {
            const auto &cs = qp.crossings[start_.edge];
            for (int c = 0; c < int(cs.size()); ++c)
                if (cs[c].prim == target_prim_ && distance(cs[c].p, target_point_) < tol_) start_.crossing = c;
            if (start_.crossing < 0) return fail(RejectReason::ReconnectionInfeasible);
        }
        compute_pdfs(pair_, qp);
        PdfTables tables = PdfTables::build(qp);
        CandidateSet cands = enumerate_candidates(pair_, qp, tables, mask);
        const Candidate *c = cands.find(technique_, start_);
        double total = cands.total();
        if (!c || !(c->pdf > 0) || !(total > 0)) return fail(RejectReason::ReconnectionInfeasible);

        out.reason = RejectReason::None;
        out.ops = ops_;
        out.technique = technique_;
        out.start = start_;
        out.jacobian_dir = jdir_;
        out.jacobian_area = jarea_;
        out.diverged = diverged;
        out.reconnected = reconnected_;
        out.contribution = path_contribution(pair_, qp);
        out.pixel = qp.pixel;
        out.counterpart_weight = c->pdf / total;
        return true;
    }

    const ScenePair &pair_;
    const MappingConfig &cfg_;
    const TechniqueSample &base_;
    const std::vector<PathVertex> &p_;
    const int k_;
    const FrameId fa_, fb_;
    std::vector<PathVertex> q_;
    std::vector<char> same_, traced_;
    std::vector<VertexOp> ops_;
    double jdir_ = 1, jarea_ = 1;
    bool reconnected_ = false;
    RejectReason reason_ = RejectReason::None;
    double dmin_ = 0, tol_ = 0;
    TechniqueId technique_ = TechniqueId::PtRejected;
    StartElement start_;
    int target_prim_ = -1;
    Vec3 target_point_;
};

} // namespace

MappingOutcome map_path(const ScenePair &pair, const TechniqueSample &base, const MappingConfig &cfg,
                        TechniqueMask mask) {
    if (base.path.size() < 2) throw StructuralError("map_path: path too short");
    return Mapper(pair, cfg, base).run(mask);
}

DifferenceSplat evaluate_difference(const ScenePair &pair, const TechniqueSample &base, double sum_pdf,
                                    const MappingOutcome *outcome, double factor) {
    (void)pair;
    DifferenceSplat s;
    const double sign = frame_sign(base.path.frame);
    s.base_pixel = base.pixel;
    // f / sum_pdf, recovered from the unweighted estimate f / pdf.
    Rgb base_term = base.contribution * (base.pdf / sum_pdf);
    if (outcome && outcome->accepted()) {
        s.base_value = base_term * (sign * factor);
        s.has_mapped = true;
        s.mapped_pixel = outcome->pixel;
        s.mapped_value = outcome->contribution *
                         (-sign * factor * outcome->counterpart_weight * outcome->jacobian_area / base.pdf);
    } else {
        s.base_value = base_term * sign;
    }
    return s;
}

} // namespace resid
