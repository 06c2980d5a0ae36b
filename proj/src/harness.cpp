// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#include "resid/harness.h"

#include <chrono>
#include <cmath>
#include <filesystem>

#include <fmt/format.h>
#include <json.hpp>

#include "resid/error.h"
#include "resid/metrics.h"
#include "resid/scene_io.h"

namespace resid {

namespace {

struct ModeName {
    RunMode mode;
    const char *name;
};
constexpr ModeName ModeNames[] = {{RunMode::Pt, "pt"},
                                  {RunMode::Correlated, "correlated"},
                                  {RunMode::Incremental, "incremental"},
                                  {RunMode::IncrementalNoMapping, "incremental-no-mapping"},
                                  {RunMode::Reference, "reference"},
                                  {RunMode::Compare, "compare"}};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int pick_batches(int spp, bool want_variance) {
    if (!want_variance) return 1;
    for (int b : {16, 8, 4, 2})
        if (spp % b == 0) return b;
    throw ValidationError(fmt::format("variance output needs an even spp (got {})", spp));
}

// Repeats a fixed-spp pass until the budget is used (at least once) and
// averages the passes; in spp mode runs exactly one pass.
template <typename Pass> Image run_passes(const RunConfig &cfg, int pass_spp, int &passes, Pass &&pass) {
    if (cfg.spp) {
        passes = 1;
        return pass(*cfg.spp, cfg.seed);
    }
    const auto t0 = Clock::now();
    Image sum;
    passes = 0;
    do {
        Image img = pass(pass_spp, hash_keys({cfg.seed, uint64_t(passes)}));
        if (passes == 0) sum = img;
        else sum += img;
        ++passes;
    } while (seconds_since(t0) < *cfg.time_seconds);
    return sum * (1.0 / passes);
}

nlohmann::json stats_json(const ResidualStats &s) {
    using nlohmann::json;
    json techs = json::object();
    for (TechniqueId t : AllTechniques) {
        int i = technique_index(t);
        techs[technique_name(t)] = {{"id", int(t)},
                                    {"invocations", s.invocations[i]},
                                    {"started", s.started[i]},
                                    {"samples", s.samples[i]}};
    }
    json rej = json::object();
    for (int r = 1; r < RejectReasonCount; ++r) rej[reject_reason_name(RejectReason(r))] = s.rejections[r];
    return {{"techniques", techs},
            {"mapping_attempts", s.mapping_attempts},
            {"mapping_accepted", s.mapping_accepted},
            {"rejection_rate", s.rejection_rate()},
            {"rejections", rej},
            {"reconnections", s.reconnections},
            {"jacobian_median", s.jacobian_percentile(0.5)},
            {"jacobian_p95", s.jacobian_percentile(0.95)},
            {"jacobian_geometric_mean", s.jacobian_geometric_mean()},
            {"max_weight_error", s.max_weight_error},
            {"candidate_count_errors", s.candidate_count_errors},
            {"max_queries_per_element", s.max_queries_per_element},
            {"paths_per_pixel", s.paths_per_pixel()},
            {"out_of_bounds_splats", s.out_of_bounds}};
}

} // namespace

RunMode parse_mode(const std::string &name) {
    for (const ModeName &m : ModeNames)
        if (name == m.name) return m.mode;
    throw ValidationError(fmt::format("unknown mode '{}'", name));
}

const char *mode_name(RunMode m) {
    for (const ModeName &e : ModeNames)
        if (e.mode == m) return e.name;
    return "?";
}

void RunConfig::validate() const {
    if (mode == RunMode::Compare) {
        if (image.empty() || reference.empty()) throw ValidationError("compare needs --image and --reference");
        return;
    }
    if (scene.empty()) throw ValidationError("--scene is required");
    if (spp.has_value() == time_seconds.has_value()) throw ValidationError("set exactly one of --spp and --time");
    if (spp && *spp < 1) throw ValidationError("--spp must be positive");
    if (time_seconds && !(*time_seconds > 0)) throw ValidationError("--time must be positive");
    if (max_vertices < 3) throw ValidationError("--max-depth must be at least 3 vertices");
    if (mask.bits == 0 || (mask.bits & ~0x7f)) throw ValidationError("technique mask must be a non-empty subset of 1-7");
    if (compositing() && old_frame.empty())
        throw ValidationError(fmt::format("mode {} composites over an old frame; pass --old-frame", mode_name(mode)));
    if (resolution < 0) throw ValidationError("resolution must be positive");
    if (!(exposure > 0)) throw ValidationError("exposure must be positive");
    bool two_sided = (mode == RunMode::Incremental && !one_way) || mode == RunMode::IncrementalNoMapping;
    if (two_sided && spp && *spp < 2) throw ValidationError("two-sided residual estimation needs --spp >= 2");
}

uint64_t content_hash(const std::string &text) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

RenderResult cached_render(const std::string &cache_dir, const std::string &key,
                           const std::function<RenderResult()> &render) {
    if (cache_dir.empty()) return render();
    namespace fs = std::filesystem;
    const std::string stem = fmt::format("{:016x}", content_hash(key));
    const fs::path mean_path = fs::path(cache_dir) / (stem + ".mean.pfm");
    const fs::path var_path = fs::path(cache_dir) / (stem + ".var.pfm");
    if (fs::exists(mean_path)) {
        RenderResult r;
        r.mean = read_pfm(mean_path.string());
        if (fs::exists(var_path)) r.variance = read_pfm(var_path.string());
        return r;
    }
    RenderResult r = render();
    std::error_code ec;
    fs::create_directories(cache_dir, ec);
    if (ec) throw IoError(fmt::format("cannot create cache '{}': {}", cache_dir, ec.message()));
    // Write to temporaries first so an interrupted run never leaves a partial entry.
    if (!r.variance.pixels.empty()) {
        write_pfm(r.variance, var_path.string() + ".tmp");
        fs::rename(var_path.string() + ".tmp", var_path);
    }
    write_pfm(r.mean, mean_path.string() + ".tmp");
    fs::rename(mean_path.string() + ".tmp", mean_path);
    return r;
}

double mean_value(const Image &img) {
    double s = 0;
    for (const Rgb &p : img.pixels) s += p.r + p.g + p.b;
    return img.pixels.empty() ? 0.0 : s / (3.0 * double(img.pixels.size()));
}

SweepResult convergence_sweep(const std::vector<int> &ladder, const std::function<Image(int spp)> &render,
                              const Image &reference, double reference_noise, const std::vector<char> *mask) {
    if (ladder.size() < 3) throw ValidationError("convergence sweep needs at least 3 ladder points");
    SweepResult out;
    bool positive = true;
    for (int spp : ladder) {
        Image img = render(spp);
        double e = (mask ? mse_masked(img, reference, *mask) : mse(img, reference)) - reference_noise;
        out.points.push_back({spp, e});
        positive = positive && e > 0;
    }
    if (positive) {
        std::vector<double> x, y;
        for (const SweepPoint &p : out.points) {
            x.push_back(p.spp);
            y.push_back(p.mse);
        }
        out.slope = loglog_slope(x, y);
    }
    return out;
}

std::string MetricsReport::to_json() const {
    nlohmann::json j;
    j["mode"] = mode;
    if (!scene.empty()) j["scene"] = scene;
    j["spp"] = spp;
    j["passes"] = passes;
    j["wall_seconds"] = wall_seconds;
    if (mse) j["mse"] = *mse;
    if (mse) j["mse_x1e5"] = *mse * 1e5;
    if (ssim) j["ssim"] = *ssim;
    j["ssim_tonemap"] = {{"channel", "luminance"}, {"curve", "srgb"}, {"exposure", exposure}, {"clamp", true}};
    j["rays"] = rays;
    j["crossing_queries"] = crossing_queries;
    if (stats) {
        j["stats"] = stats_json(*stats);
        j["paths_per_sample"] = spp > 0 ? stats->paths_per_pixel() / spp : 0.0;
    }
    return j.dump(2);
}

RunOutput run(const RunConfig &cfg) {
    cfg.validate();
    const auto t0 = Clock::now();
    RunOutput out;
    MetricsReport &rep = out.report;
    rep.mode = mode_name(cfg.mode);
    rep.exposure = cfg.exposure;

    if (cfg.mode == RunMode::Compare) {
        Image a = read_image(cfg.image), b = read_image(cfg.reference);
        rep.mse = mse(a, b);
        rep.ssim = ssim(a, b, cfg.exposure);
        rep.passes = 0;
        rep.wall_seconds = seconds_since(t0);
        return out;
    }

    SceneFile file = load_scene_file(cfg.scene);
    const std::string scene_text = file.text;
    ScenePair pair(std::move(file.base), std::move(file.edits));
    if (cfg.resolution > 0) pair.set_resolution(cfg.resolution, cfg.resolution);
    const int w = pair.camera().width(), h = pair.camera().height();
    rep.scene = cfg.scene;

    std::optional<Image> old_frame;
    if (cfg.compositing()) {
        old_frame = read_image(cfg.old_frame);
        if (old_frame->width != w || old_frame->height != h)
            throw ValidationError(fmt::format("old frame is {}x{} but the camera renders {}x{}", old_frame->width,
                                              old_frame->height, w, h));
    }

    PathTracerConfig pt;
    pt.max_vertices = cfg.max_vertices;
    pt.threads = cfg.threads;
    const bool want_var = !cfg.variance_out.empty();
    int pass_spp = 1;

    switch (cfg.mode) {
    case RunMode::Pt: {
        out.image = run_passes(cfg, 1, rep.passes, [&](int spp, uint64_t seed) {
            pt.spp = spp;
            pt.seed = seed;
            pt.batches = pick_batches(spp, want_var && cfg.spp.has_value());
            RenderResult r = render(pair, cfg.frame, pt);
            if (want_var && cfg.spp) out.variance = r.variance;
            return r.mean;
        });
        break;
    }
    case RunMode::Reference: {
        if (!cfg.spp) throw ValidationError("reference mode takes --spp");
        pt.spp = *cfg.spp;
        pt.seed = cfg.seed;
        pt.batches = pick_batches(pt.spp, true);
        const std::string key = fmt::format("reference|{}|{}|{}|{}|{}|{}x{}|{}", scene_text, frame_name(cfg.frame),
                                            pt.spp, pt.seed, pt.max_vertices, pt.batches, w, h, int(pt.nee));
        RenderResult r = cached_render(cfg.cache_dir, key, [&] { return render(pair, cfg.frame, pt); });
        out.image = r.mean;
        out.variance = r.variance;
        rep.passes = 1;
        break;
    }
    case RunMode::Correlated: {
        out.residual = run_passes(cfg, 1, rep.passes, [&](int spp, uint64_t seed) {
            pt.spp = spp;
            pt.seed = seed;
            return render_residual_correlated(pair, pt).mean;
        });
        break;
    }
    case RunMode::Incremental:
    case RunMode::IncrementalNoMapping: {
        ResidualConfig rc;
        rc.max_vertices = cfg.max_vertices;
        rc.mask = cfg.mask;
        rc.threads = cfg.threads;
        rc.technique_layers = cfg.technique_layers;
        if (cfg.mode == RunMode::IncrementalNoMapping || !cfg.mapping) rc.mode = ResidualMode::NoMapping;
        else if (cfg.one_way) rc.mode = ResidualMode::OneWay;
        ResidualStats stats;
        std::vector<Image> unweighted, weighted;
        pass_spp = rc.mode == ResidualMode::OneWay ? 1 : 2;
        out.residual = run_passes(cfg, pass_spp, rep.passes, [&](int spp, uint64_t seed) {
            rc.spp = spp;
            rc.seed = seed;
            ResidualResult r = render_residual(pair, rc);
            stats.merge(r.stats);
            stats.pixels = r.stats.pixels;
            if (cfg.technique_layers) {
                if (unweighted.empty()) {
                    unweighted = r.unweighted_layers;
                    weighted = r.weighted_layers;
                } else {
                    for (size_t t = 0; t < unweighted.size(); ++t) {
                        unweighted[t] += r.unweighted_layers[t];
                        weighted[t] += r.weighted_layers[t];
                    }
                }
            }
            return r.residual;
        });
        const double inv = 1.0 / rep.passes;
        for (Image &img : unweighted) img = img * inv;
        for (Image &img : weighted) img = img * inv;
        out.unweighted_layers = std::move(unweighted);
        out.weighted_layers = std::move(weighted);
        // Counters sum over passes, so paths per pixel covers the whole budget.
        rep.stats = stats;
        break;
    }
    case RunMode::Compare:
        break;
    }

    rep.spp = cfg.spp ? *cfg.spp : rep.passes * pass_spp;
    if (out.residual && old_frame) out.image = composite(*old_frame, *out.residual);
    if (!cfg.reference.empty() && out.image) {
        Image ref = read_image(cfg.reference);
        rep.mse = mse(*out.image, ref);
        rep.ssim = ssim(*out.image, ref, cfg.exposure);
    }
    rep.rays = pair.counters().rays.load();
    rep.crossing_queries = pair.counters().crossing_queries.load();
    rep.wall_seconds = seconds_since(t0);
    return out;
}

void write_outputs(const RunConfig &cfg, const RunOutput &out) {
    if (!cfg.out.empty() && out.image) write_image(*out.image, cfg.out, cfg.exposure);
    if (!cfg.residual_out.empty() && out.residual) write_image(*out.residual, cfg.residual_out, cfg.exposure);
    if (!cfg.variance_out.empty() && out.variance && !out.variance->pixels.empty())
        write_image(*out.variance, cfg.variance_out, cfg.exposure);
    if (cfg.technique_layers && !cfg.out.empty()) {
        namespace fs = std::filesystem;
        fs::path base(cfg.out);
        for (size_t t = 0; t < out.unweighted_layers.size(); ++t) {
            const char *name = technique_name(AllTechniques[t]);
            fs::path u = base.parent_path() / fmt::format("{}.t{}-{}.unweighted.pfm", base.stem().string(), t + 1, name);
            fs::path wt = base.parent_path() / fmt::format("{}.t{}-{}.weighted.pfm", base.stem().string(), t + 1, name);
            write_pfm(out.unweighted_layers[t], u.string());
            write_pfm(out.weighted_layers[t], wt.string());
        }
    }
    if (!cfg.report.empty()) {
        std::FILE *f = std::fopen(cfg.report.c_str(), "wb");
        if (!f) throw IoError(fmt::format("cannot write report '{}'", cfg.report));
        std::string text = out.report.to_json() + "\n";
        bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
        ok = (std::fclose(f) == 0) && ok;
        if (!ok) throw IoError(fmt::format("write failed for '{}'", cfg.report));
    }
}

} // namespace resid
