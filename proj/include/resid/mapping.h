// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "resid/mis.h"
#include "resid/techniques.h"

namespace resid {

enum class RejectReason : uint8_t {
    None,
    OccludedByDynamic,
    JacobianExceedsThreshold,
    MultiDynamicHit,
    ReconnectionInfeasible,
};
inline constexpr int RejectReasonCount = 5;
const char *reject_reason_name(RejectReason r);

// How each counterpart vertex was obtained.
enum class VertexOp : uint8_t {
    Endpoint,      // camera or emitter point, kept
    Rigid,         // object transform onto the twin instance (identity for material edits)
    PairMap,       // dynamic vertex <-> ghost crossing at the same location, seen from the camera
    GhostRay,      // re-traced from a mapped ghost start
    DirectionCopy, // same predecessor, same direction
    Reconnect,     // vertex kept, predecessor changed
    Replay,        // same direction variates at a moved predecessor
};

struct MappingConfig {
    double jacobian_threshold = 10;  // reject when J > t or J < 1/t
    double roughness_threshold = 0.1;
    double distance_fraction = 0.01; // d_min as a fraction of the scene diagonal
};

struct MappingOutcome {
    RejectReason reason = RejectReason::None;
    bool accepted() const { return reason == RejectReason::None; }

    Path path; // counterpart in the target frame
    std::vector<VertexOp> ops;
    TechniqueId technique = TechniqueId::PtRejected; // technique of the counterpart start
    StartElement start;
    // Solid-angle (per-direction) Jacobian, used for the threshold test, and
    // the product-area Jacobian |dq/dp| used by the estimator.
    double jacobian_dir = 1;
    double jacobian_area = 1;
    bool diverged = false;
    bool reconnected = false;
    Rgb contribution; // f of the counterpart in its own frame
    Vec2 pixel;
    // Balance weight of the counterpart's start among its own frame's candidates.
    double counterpart_weight = 0;
};

// Maps a sample into the other frame. Techniques 1-6 start from their start
// element (twin map, or the dynamic/ghost pair map for 2 <-> 5), technique 7
// copies the camera direction; the remaining vertices are processed in
// generation order with direction copy, a single reconnection, or replay.
MappingOutcome map_path(const ScenePair &pair, const TechniqueSample &base, const MappingConfig &cfg,
                        TechniqueMask mask = {});

// [cos(t_prev <- x_i) / cos(x_prev <- x_i)] * |x_prev - x_i|^2 / |t_prev - x_i|^2,
// cosines taken at x_i. nullopt when either cosine vanishes.
std::optional<double> reconnection_jacobian(const Vec3 &x_prev, const Vec3 &t_prev, const Vec3 &x_i,
                                            const Vec3 &n_i);

// Signed splats of one sample. `factor` is 1/2 for two-way estimation and 1
// for the one-way ablation; `sum_pdf` is the sample's candidate pdf sum.
struct DifferenceSplat {
    Vec2 base_pixel;
    Rgb base_value;
    bool has_mapped = false;
    Vec2 mapped_pixel;
    Rgb mapped_value;
};
DifferenceSplat evaluate_difference(const ScenePair &pair, const TechniqueSample &base, double sum_pdf,
                                    const MappingOutcome *outcome, double factor);

} // namespace resid
