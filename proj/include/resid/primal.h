// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>

#include "resid/film.h"
#include "resid/path.h"
#include "resid/rng.h"

namespace resid {

struct PathTracerConfig {
    int max_vertices = 8; // k_max, camera and emitter vertices included
    int spp = 16;
    uint64_t seed = 1;
    bool nee = true;
    bool russian_roulette = false;
    int threads = 0;  // 0: hardware concurrency
    int batches = 1;  // spp is split into this many batches for variance estimates
};

struct RenderResult {
    Image mean;
    // Per-pixel variance of `mean`, estimated from batch means. Empty when
    // batches < 2.
    Image variance;
};

// Stream keys. Every (pixel, sample) owns a stream, so the image does not
// depend on the worker count or the order tiles are processed.
inline Sampler pixel_sampler(uint64_t seed, int pixel, int sample) {
    return Sampler(seed, {uint64_t(pixel), uint64_t(sample), 0x5054ull});
}

using PixelEstimator = std::function<Rgb(int pixel, Vec2 raster_pixel, int sample)>;

// Evaluates `estimate` spp times per pixel on a tile-parallel schedule and
// reduces to the pixel mean and (batches >= 2) the variance of that mean.
// spp must be a multiple of batches.
RenderResult render_pixels(int width, int height, int spp, int batches, int threads,
                           const PixelEstimator &estimate);

// Balance heuristic between two strategies.
double nee_mis_weight(double pdf_a, double pdf_b);

// One sample of pixel radiance through `raster_pixel` (integer corner);
// the raster offset is drawn from `s`.
Rgb trace_radiance(const ScenePair &pair, FrameId view, Vec2 raster_pixel, const PathTracerConfig &cfg,
                   Sampler &s);

RenderResult render(const ScenePair &pair, FrameId view, const PathTracerConfig &cfg);

// BSDF-sampled camera walk with pdf records and ghost crossings, for
// inspection and tests. Terminates on a miss or at max_vertices; the last
// vertex is whatever surface was reached, so pdf_fwd[k-1] is the BSDF density
// rather than an emitter density.
Path trace_camera_path(const ScenePair &pair, FrameId view, Vec2 raster_pixel, int max_vertices,
                       Sampler &s);

} // namespace resid
