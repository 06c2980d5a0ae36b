// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#include "resid/residual.h"

#include <cmath>

#include "resid/error.h"
#include "resid/parallel.h"

namespace resid {

void ResidualStats::merge(const ResidualStats &o) {
    for (int t = 0; t < 7; ++t) {
        invocations[t] += o.invocations[t];
        started[t] += o.started[t];
        samples[t] += o.samples[t];
    }
    mapping_attempts += o.mapping_attempts;
    mapping_accepted += o.mapping_accepted;
    for (int r = 0; r < RejectReasonCount; ++r) rejections[r] += o.rejections[r];
    reconnections += o.reconnections;
    for (size_t b = 0; b < jacobian_histogram.size(); ++b) jacobian_histogram[b] += o.jacobian_histogram[b];
    jacobian_log_sum += o.jacobian_log_sum;
    max_weight_error = std::max(max_weight_error, o.max_weight_error);
    candidate_count_errors += o.candidate_count_errors;
    max_queries_per_element = std::max(max_queries_per_element, o.max_queries_per_element);
    out_of_bounds += o.out_of_bounds;
}

uint64_t ResidualStats::total_started() const {
    uint64_t n = 0;
    for (uint64_t v : started) n += v;
    return n;
}

uint64_t ResidualStats::total_invocations() const {
    uint64_t n = 0;
    for (uint64_t v : invocations) n += v;
    return n;
}

double ResidualStats::jacobian_percentile(double q) const {
    uint64_t total = 0;
    for (uint64_t v : jacobian_histogram) total += v;
    if (total == 0) return 1.0;
    double target = q * double(total);
    uint64_t acc = 0;
    const int n = int(jacobian_histogram.size());
    for (int b = 0; b < n; ++b) {
        acc += jacobian_histogram[b];
        if (double(acc) >= target) return std::pow(10.0, -1.0 + 2.0 * (b + 0.5) / n);
    }
    return 10.0;
}

double ResidualStats::jacobian_geometric_mean() const {
    return mapping_accepted ? std::pow(10.0, jacobian_log_sum / double(mapping_accepted)) : 1.0;
}

TechniqueMask effective_mask(const ScenePair &pair, TechniqueMask requested) {
    TechniqueMask m = requested;
    if (!pair.has_dynamic()) {
        m.set(TechniqueId::DynFromEmitter, false);
        m.set(TechniqueId::DynFromSensor, false);
        m.set(TechniqueId::DynTwoEnds, false);
    }
    if (!pair.has_ghosts()) {
        m.set(TechniqueId::GhostFromEmitter, false);
        m.set(TechniqueId::GhostFromSensor, false);
        m.set(TechniqueId::GhostTwoEnds, false);
    }
    return m;
}

namespace {

struct Worker {
    SignedFilm film;
    std::vector<SignedFilm> unweighted, weighted;
    ResidualStats stats;
};

} // namespace

ResidualResult render_residual(const ScenePair &pair, const ResidualConfig &cfg) {
    const Camera &cam = pair.camera();
    const int w = cam.width(), h = cam.height();
    if (cfg.max_vertices < 2) throw ValidationError("max path length must be at least 2 vertices");
    int n_new = cfg.spp, n_old = 0;
    if (cfg.mode != ResidualMode::OneWay) {
        if (cfg.spp < 2) throw ValidationError("two-sided residual estimation needs at least 2 spp");
        n_new = (cfg.spp + 1) / 2;
        n_old = cfg.spp / 2;
    } else if (cfg.spp < 1) {
        throw ValidationError("spp must be at least 1");
    }
    const TechniqueMask mask = effective_mask(pair, cfg.mask);
    const int side_spp[2] = {n_old, n_new};
    const double factor = cfg.mode == ResidualMode::TwoWay ? 0.5 : 1.0;

    const int threads = resolve_threads(cfg.threads);
    std::vector<Worker> workers(std::min(threads, 2 * h));
    for (Worker &wk : workers) {
        wk.film = SignedFilm(w, h);
        wk.film.set_light_normalizer(1);
        if (cfg.technique_layers) {
            wk.unweighted.assign(7, SignedFilm(w, h));
            wk.weighted.assign(7, SignedFilm(w, h));
            for (int t = 0; t < 7; ++t) {
                wk.unweighted[t].set_light_normalizer(1);
                wk.weighted[t].set_light_normalizer(1);
            }
        }
    }

    // Work item: (frame, image row).
    parallel_for_static(2 * h, int(workers.size()), [&](int item, int wid) {
        Worker &wk = workers[wid];
        const FrameId frame = item < h ? FrameId::New : FrameId::Old;
        const int y = item % h;
        const int n = side_spp[int(frame)];
        if (n == 0) return;
        const double inv_n = 1.0 / (double(n) * w * h);
        const double sign = frame_sign(frame);
        SamplingContext ctx{pair, frame, cfg.max_vertices};

        for (int x = 0; x < w; ++x) {
            const int pixel = y * w + x;
            for (int s = 0; s < n; ++s) {
                for (TechniqueId t : AllTechniques) {
                    if (!mask.has(t)) continue;
                    const int ti = technique_index(t);
                    Sampler sampler(cfg.seed, {uint64_t(frame), uint64_t(pixel), uint64_t(s), uint64_t(t)});
                    TechniqueResult res = sample_technique(t, ctx, {double(x), double(y)}, sampler);
                    ++wk.stats.invocations[ti];
                    wk.stats.started[ti] += res.started;
                    wk.stats.samples[ti] += res.samples.size();

                    for (const TechniqueSample &smp : res.samples) {
                        PdfTables tables = PdfTables::build(smp.path);
                        CandidateSet cands = enumerate_candidates(pair, smp.path, tables, mask);
                        const double total = cands.total();
                        if (!(total > 0)) throw StructuralError("render_residual: zero candidate pdf sum");
                        double wsum = 0;
                        for (const Candidate &c : cands.entries) wsum += c.pdf / total;
                        wk.stats.max_weight_error = std::max(wk.stats.max_weight_error, std::abs(wsum - 1));
                        if (int(cands.entries.size()) != cands.n_dynamic + cands.n_crossings + 1)
                            ++wk.stats.candidate_count_errors;
                        int elements = cands.n_dynamic + cands.n_crossings;
                        if (elements > 0)
                            wk.stats.max_queries_per_element = std::max(
                                wk.stats.max_queries_per_element, double(cands.segment_queries) / elements);

                        MappingOutcome outcome;
                        const MappingOutcome *op = nullptr;
                        if (cfg.mode != ResidualMode::NoMapping) {
                            outcome = map_path(pair, smp, cfg.mapping, mask);
                            op = &outcome;
                            ++wk.stats.mapping_attempts;
                            ++wk.stats.rejections[int(outcome.reason)];
                            if (outcome.accepted()) {
                                ++wk.stats.mapping_accepted;
                                wk.stats.reconnections += outcome.reconnected;
                                double lj = std::log10(outcome.jacobian_dir);
                                wk.stats.jacobian_log_sum += lj;
                                int bin = int(std::floor((lj + 1.0) / 2.0 * 40));
                                ++wk.stats.jacobian_histogram[std::clamp(bin, 0, 39)];
                            }
                        }
                        DifferenceSplat d = evaluate_difference(pair, smp, total, op, factor);
                        wk.film.splat(d.base_pixel, d.base_value * inv_n, SplatKind::LightSplat);
                        if (d.has_mapped) wk.film.splat(d.mapped_pixel, d.mapped_value * inv_n, SplatKind::LightSplat);

                        if (cfg.technique_layers) {
                            wk.unweighted[ti].splat(smp.pixel, smp.contribution * (sign * inv_n), SplatKind::LightSplat);
                            Rgb f = smp.contribution * smp.pdf;
                            wk.weighted[ti].splat(smp.pixel, f * (sign * inv_n / total), SplatKind::LightSplat);
                        }
                    }
                }
            }
        }
    });

    ResidualResult out;
    SignedFilm film(w, h);
    film.set_light_normalizer(1);
    for (Worker &wk : workers) {
        film.merge(wk.film);
        out.stats.merge(wk.stats);
    }
    out.stats.out_of_bounds = film.out_of_bounds();
    out.stats.pixels = w * h;
    out.residual = film.resolve();
    if (cfg.technique_layers) {
        for (int t = 0; t < 7; ++t) {
            SignedFilm u(w, h), wt(w, h);
            u.set_light_normalizer(1);
            wt.set_light_normalizer(1);
            for (Worker &wk : workers) {
                u.merge(wk.unweighted[t]);
                wt.merge(wk.weighted[t]);
            }
            out.unweighted_layers.push_back(u.resolve());
            out.weighted_layers.push_back(wt.resolve());
        }
    }
    return out;
}

} // namespace resid
