// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "resid/path.h"
#include "resid/rng.h"
#include "resid/technique_id.h"

namespace resid {

// A dynamic path together with the technique that generated it.
struct TechniqueSample {
    Path path;
    TechniqueId technique = TechniqueId::PtRejected;
    StartElement start;
    Vec2 pixel;         // raster position of the camera connection
    double pdf = 0;     // generation density, product area measure
    Rgb contribution;   // f / pdf in the sample's own frame, unweighted
};

struct TechniqueResult {
    std::vector<TechniqueSample> samples;
    bool started = false; // the initial vertex (or ghost ray) was established
};

struct SamplingContext {
    const ScenePair &pair;
    FrameId frame = FrameId::New;
    int max_vertices = 8;
};

// Area density at x1 induced by sampling a ghost point c uniformly (per unit
// area) and shooting from `origin` through it:
// |c - o|^2 / |cos_c| * |cos_x1| / |x1 - o|^2. Multiply by p(c) for the pdf.
double ghost_first_hit_factor(const Vec3 &c, const Vec3 &n_c, const Vec3 &origin, const Vec3 &x1,
                              const Vec3 &n1);
// Joint area density of (x1, x2) per unit ghost-area density when a uniform
// sphere direction is drawn at c and traced both ways:
// p_dir |cos_1| |cos_2| / (|cos_c| |x1 - x2|^2).
double ghost_two_ends_density(const Vec3 &c, const Vec3 &n_c, const Vec3 &x1, const Vec3 &n1,
                              const Vec3 &x2, const Vec3 &n2);

TechniqueResult sample_dyn_from_emitter(const SamplingContext &ctx, Sampler &s);
TechniqueResult sample_dyn_from_sensor(const SamplingContext &ctx, Sampler &s);
TechniqueResult sample_dyn_two_ends(const SamplingContext &ctx, Sampler &s);
TechniqueResult sample_ghost_from_emitter(const SamplingContext &ctx, Sampler &s);
TechniqueResult sample_ghost_from_sensor(const SamplingContext &ctx, Sampler &s);
TechniqueResult sample_ghost_two_ends(const SamplingContext &ctx, Sampler &s);
// Camera path through `raster_pixel` (integer pixel corner) with NEE at every
// vertex; only dynamic paths are kept. A directly visible emitter yields a
// two-vertex path.
TechniqueResult sample_pt_rejected(const SamplingContext &ctx, Vec2 raster_pixel, Sampler &s);

TechniqueResult sample_technique(TechniqueId t, const SamplingContext &ctx, Vec2 raster_pixel,
                                 Sampler &s);

// Structural check that a sample has its technique's form: start element type
// and position, both-side bounce requirements, and size limits.
bool matches_technique_form(const TechniqueSample &s, int max_vertices);

} // namespace resid
