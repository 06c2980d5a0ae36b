// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "resid/correlated.h"
#include "resid/residual.h"

namespace resid {

enum class RunMode { Pt, Correlated, Incremental, IncrementalNoMapping, Reference, Compare };

RunMode parse_mode(const std::string &name); // throws ValidationError
const char *mode_name(RunMode m);

struct RunConfig {
    RunMode mode = RunMode::Incremental;
    std::string scene;
    std::optional<int> spp;             // exactly one of spp and time_seconds
    std::optional<double> time_seconds;
    uint64_t seed = 1;
    int max_vertices = 8;
    FrameId frame = FrameId::New; // pt and reference
    TechniqueMask mask;
    bool mapping = true;
    bool one_way = false;
    bool technique_layers = false;
    int threads = 0;
    int resolution = 0; // square override; 0 keeps the scene's
    double exposure = 1.0;

    std::string out;           // image written by every mode except compare
    std::string old_frame;     // required by compositing modes
    std::string residual_out;  // optional residual image
    std::string variance_out;  // optional per-pixel variance (pt, reference)
    std::string image;         // compare: estimate
    std::string reference;     // compare: reference; other modes: optional metric target
    std::string report;        // JSON report path
    std::string cache_dir;     // reference mode: content-hashed cache

    // Throws ValidationError describing the first problem found.
    void validate() const;
    bool compositing() const {
        return mode == RunMode::Correlated || mode == RunMode::Incremental ||
               mode == RunMode::IncrementalNoMapping;
    }
};

struct MetricsReport {
    std::string mode, scene;
    int spp = 0;
    int passes = 0;
    double wall_seconds = 0;
    std::optional<double> mse, ssim;
    double exposure = 1.0;
    std::optional<ResidualStats> stats;
    uint64_t rays = 0, crossing_queries = 0;

    std::string to_json() const;
};

struct RunOutput {
    std::optional<Image> image, residual, variance;
    std::vector<Image> unweighted_layers, weighted_layers;
    MetricsReport report;
};

// Executes one run without touching the file system except for reading
// inputs and the reference cache.
RunOutput run(const RunConfig &cfg);
// Writes the images and report named in cfg.
void write_outputs(const RunConfig &cfg, const RunOutput &out);

// Stable 64-bit FNV-1a hash used to key cached references.
uint64_t content_hash(const std::string &text);

// Returns the render cached under `key` in cache_dir (mean and variance PFM),
// producing and storing it on a miss. An empty cache_dir disables caching.
RenderResult cached_render(const std::string &cache_dir, const std::string &key,
                           const std::function<RenderResult()> &render);

struct SweepPoint {
    int spp = 0;
    double mse = 0;
};

struct SweepResult {
    std::vector<SweepPoint> points;
    std::optional<double> slope; // absent when any corrected MSE is not positive
};

// MSE of render(spp) against the reference at every ladder step. reference_noise
// (the mean reference variance per channel) is subtracted from each MSE, and
// mask, when given, restricts the pixels. Throws ValidationError for fewer
// than 3 steps.
SweepResult convergence_sweep(const std::vector<int> &ladder, const std::function<Image(int spp)> &render,
                              const Image &reference, double reference_noise = 0,
                              const std::vector<char> *mask = nullptr);

// Mean over pixels and channels of a variance image.
double mean_value(const Image &img);

} // namespace resid
