// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "resid/scene.h"

namespace resid {

struct PathVertex {
    Vec3 p;
    Vec3 n;
    int prim = -1;         // -1 for the camera vertex
    bool dynamic = false;  // lies on an edited object
    // Direction variates that generated this vertex from its predecessor in the
    // generating walk; x < 0 when the vertex was not produced by BSDF sampling.
    Vec2 u{-1, -1};
};

// Light path x_0 (camera) ... x_{k-1} (emitter) living in one frame.
//
// pdf_fwd[i] is the area density of x_i when the path is walked from the
// camera: 1 for the camera, the image-wide camera density at x_1, BSDF
// sampling at x_{i-1} for interior vertices, and uniform emitter-area
// sampling for the last vertex. pdf_rev[i] is the density of x_i when walked
// from the emitter: BSDF sampling at x_{i+1} for 1 <= i <= k-3, 1 for the
// camera, the emitter area density for the last vertex; pdf_rev[k-2] is 0 as
// no technique generates that vertex by a directional step from the emitter.
struct Path {
    FrameId frame = FrameId::New;
    std::vector<PathVertex> v;
    // crossings[i]: ghost crossings on the edge (v[i], v[i+1]), ordered from v[i].
    std::vector<std::vector<GhostCrossing>> crossings;
    Vec2 pixel;
    std::vector<double> pdf_fwd, pdf_rev;

    int size() const { return int(v.size()); }
    int dynamic_vertex_count() const;
    int crossing_count() const;
    bool is_dynamic() const { return dynamic_vertex_count() + crossing_count() > 0; }
};

// |cos at `to`| / |from - to|^2: converts a solid-angle density at `from` to area at `to`.
double solid_angle_to_area(const Vec3 &from, const Vec3 &to, const Vec3 &n_to);

void compute_crossings(const ScenePair &pair, Path &path);
void compute_pdfs(const ScenePair &pair, Path &path);

// Measurement contribution f of the path in its own frame (visibility assumed).
// Zero when the camera direction leaves the image.
Rgb path_contribution(const ScenePair &pair, const Path &path);

// Geometric validity in the path's frame: mutual visibility of consecutive
// vertices, camera projection on-screen, solid vertices, emitter at the end.
bool path_valid(const ScenePair &pair, const Path &path);

// Textual form such as "E - S =2 D - L": vertices S/D, edges "-" (static) or "=n".
std::string path_form(const Path &path);

} // namespace resid
