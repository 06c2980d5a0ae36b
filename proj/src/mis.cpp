// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#include "resid/mis.h"

#include "resid/error.h"
#include "resid/techniques.h"

namespace resid {

double CandidateSet::total() const {
    double s = 0;
    for (const Candidate &c : entries) s += c.pdf;
    return s;
}

const Candidate *CandidateSet::find(TechniqueId t, const StartElement &s) const {
    for (const Candidate &c : entries)
        if (c.technique == t && c.start == s) return &c;
    return nullptr;
}

TechniqueId technique_for_vertex(int vertex, int path_size) {
    if (vertex == path_size - 2) return TechniqueId::DynFromEmitter;
    if (vertex == 1) return TechniqueId::DynFromSensor;
    return TechniqueId::DynTwoEnds;
}

TechniqueId technique_for_edge(int edge, int path_size) {
    if (edge == path_size - 2) return TechniqueId::GhostFromEmitter;
    if (edge == 0) return TechniqueId::GhostFromSensor;
    return TechniqueId::GhostTwoEnds;
}

CandidateSet enumerate_candidates(const ScenePair &pair, const Path &path, const PdfTables &tables,
                                  TechniqueMask mask) {
    const int k = path.size();
    const FrameId f = path.frame;
    const auto &v = path.v;
    if (int(path.crossings.size()) != k - 1 || tables.size() != k)
        throw StructuralError("enumerate_candidates: path lacks crossing or pdf records");

    auto inv_area = [&](SurfaceSet s) {
        double a = pair.surface_area(s, f);
        return a > 0 ? 1.0 / a : 0.0;
    };
    const double p_dyn = inv_area(SurfaceSet::Dynamic);
    const double p_ghost = inv_area(SurfaceSet::Ghost);
    const double p_light = inv_area(SurfaceSet::Emitter);
    const int q0 = tables.queries;
    auto fwd = [&](int i, int j) { return tables.query(i, j, PdfDirection::TowardEmitter); };
    auto rev = [&](int i, int j) { return tables.query(i, j, PdfDirection::TowardSensor); };

    CandidateSet set;
    auto add = [&](TechniqueId t, StartElement s, double pdf) {
        set.entries.push_back({t, s, mask.has(t) ? pdf : 0.0});
    };

    for (int i = 0; i < k; ++i) {
        if (i >= 1 && i <= k - 2 && v[i].dynamic) {
            ++set.n_dynamic;
            TechniqueId t = technique_for_vertex(i, k);
            double pdf = 0;
            if (t == TechniqueId::DynFromEmitter) {
                pdf = p_light * p_dyn * rev(1, k - 2);
            } else if (t == TechniqueId::DynFromSensor) {
                pdf = p_dyn * fwd(2, k - 1) * p_light;
            } else {
                double first = cosine_hemisphere_pdf(v[i].n, normalize(v[i + 1].p - v[i].p)) *
                               solid_angle_to_area(v[i].p, v[i + 1].p, v[i + 1].n);
                pdf = p_dyn * first * fwd(i + 2, k - 1) * p_light * rev(1, i);
            }
            add(t, {i, -1, -1}, pdf);
        }
        if (i + 1 < k) {
            const auto &cs = path.crossings[i];
            for (int c = 0; c < int(cs.size()); ++c) {
                ++set.n_crossings;
                TechniqueId t = technique_for_edge(i, k);
                const GhostCrossing &g = cs[c];
                double pdf = 0;
                if (k == 2) {
                    pdf = 0; // a bare camera-to-emitter segment has no surface to start a ghost walk from
                } else if (t == TechniqueId::GhostFromEmitter) {
                    pdf = p_light * p_ghost *
                          ghost_first_hit_factor(g.p, g.n, v[k - 1].p, v[k - 2].p, v[k - 2].n) *
                          rev(1, k - 2);
                } else if (t == TechniqueId::GhostFromSensor) {
                    pdf = p_ghost * ghost_first_hit_factor(g.p, g.n, v[0].p, v[1].p, v[1].n) *
                          fwd(2, k - 1) * p_light;
                } else {
                    pdf = p_ghost *
                          ghost_two_ends_density(g.p, g.n, v[i].p, v[i].n, v[i + 1].p, v[i + 1].n) *
                          rev(1, i) * fwd(i + 2, k - 1) * p_light;
                }
                add(t, {-1, i, c}, pdf);
            }
        }
    }
    add(TechniqueId::PtRejected, {}, fwd(1, k));
    set.segment_queries = tables.queries - q0;
    return set;
}

double mis_weight(const CandidateSet &set, TechniqueId producer, const StartElement &start) {
    const Candidate *c = set.find(producer, start);
    if (!c) throw StructuralError("mis_weight: producer is not a candidate of the path");
    double total = set.total();
    if (!(total > 0)) throw StructuralError("mis_weight: zero denominator");
    return c->pdf / total;
}

} // namespace resid
