// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

// Command-line driver. Exit codes: 0 success, 2 invalid input, 3 I/O failure.

#include <cstdio>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "resid/error.h"
#include "resid/fixtures.h"
#include "resid/harness.h"

using namespace resid;

int main(int argc, char **argv) {
    CLI::App app{"Incremental re-rendering: residual images between two scene states"};
    RunConfig cfg;
    std::string mode = "incremental", techniques = "1234567", frame = "new", fixtures_dir;
    int spp = 0, fixture_res = 128;
    double time_s = 0;

    app.add_option("--scene", cfg.scene, "scene-pair JSON file");
    app.add_option("--mode", mode, "pt | correlated | incremental | incremental-no-mapping | reference | compare");
    auto *spp_opt = app.add_option("--spp", spp, "samples per pixel");
    auto *time_opt = app.add_option("--time", time_s, "wall-clock budget in seconds");
    spp_opt->excludes(time_opt);
    app.add_option("--seed", cfg.seed, "random seed");
    app.add_option("--max-depth", cfg.max_vertices, "maximum path length in vertices (camera and emitter included)");
    app.add_option("--out", cfg.out, "output image (.pfm or .png)");
    app.add_option("--old-frame", cfg.old_frame, "converged old frame (.pfm) for compositing modes");
    app.add_option("--techniques", techniques, "enabled techniques, e.g. 1234567 or 1,2,3,7");
    app.add_flag("--no-mapping", [&](int64_t) { cfg.mapping = false; }, "estimate each frame's dynamic paths on their own");
    app.add_flag("--one-way", cfg.one_way, "sample the new frame only (biased ablation)");
    app.add_flag("--dump-technique-layers", cfg.technique_layers, "write per-technique layers next to --out");
    app.add_option("--report", cfg.report, "JSON metrics report");
    app.add_option("--frame", frame, "frame rendered by pt/reference: old | new");
    app.add_option("--image", cfg.image, "compare: image under test");
    app.add_option("--reference", cfg.reference, "reference image for MSE/SSIM");
    app.add_option("--residual", cfg.residual_out, "also write the residual image");
    app.add_option("--variance", cfg.variance_out, "pt/reference: write per-pixel variance of the mean");
    app.add_option("--cache", cfg.cache_dir, "reference: cache directory keyed by scene content");
    app.add_option("--threads", cfg.threads, "worker threads (0: all cores)");
    app.add_option("--resolution", cfg.resolution, "override the camera resolution (square)");
    app.add_option("--exposure", cfg.exposure, "exposure for PNG output and SSIM tone mapping");
    app.add_option("--write-fixtures", fixtures_dir, "write the built-in scene pairs to this directory and exit");
    app.add_option("--fixture-resolution", fixture_res, "resolution stored in written fixtures");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (!fixtures_dir.empty()) {
            for (const std::string &p : build_fixtures(fixtures_dir, fixture_res)) std::printf("%s\n", p.c_str());
            return 0;
        }
        cfg.mode = parse_mode(mode);
        if (*spp_opt) cfg.spp = spp;
        if (*time_opt) cfg.time_seconds = time_s;
        cfg.mask = TechniqueMask::parse(techniques);
        if (frame == "new") cfg.frame = FrameId::New;
        else if (frame == "old") cfg.frame = FrameId::Old;
        else throw ValidationError(fmt::format("--frame must be old or new, got '{}'", frame));

        RunOutput out = run(cfg);
        write_outputs(cfg, out);
        if (cfg.report.empty()) std::printf("%s\n", out.report.to_json().c_str());
        return 0;
    } catch (const ValidationError &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const IoError &e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return 3;
    } catch (const std::exception &e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 1;
    }
}
