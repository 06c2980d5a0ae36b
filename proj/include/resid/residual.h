// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "resid/film.h"
#include "resid/mapping.h"

namespace resid {

enum class ResidualMode {
    TwoWay,    // both frames sample, each maps toward the other with factor 1/2
    OneWay,    // new frame only, factor 1 (ablation; biased where mappings do not cover)
    NoMapping, // each frame's dynamic paths estimated on their own and subtracted
};

struct ResidualConfig {
    int spp = 16; // total per-pixel sample budget; split evenly between the frames when both sample
    uint64_t seed = 1;
    int max_vertices = 8;
    TechniqueMask mask;
    ResidualMode mode = ResidualMode::TwoWay;
    MappingConfig mapping;
    int threads = 0;
    bool technique_layers = false;
};

struct ResidualStats {
    std::array<uint64_t, 7> invocations{}; // technique runs
    std::array<uint64_t, 7> started{};     // runs that traced at least one path segment
    std::array<uint64_t, 7> samples{};     // dynamic paths emitted
    uint64_t mapping_attempts = 0;
    uint64_t mapping_accepted = 0;
    std::array<uint64_t, RejectReasonCount> rejections{};
    uint64_t reconnections = 0;
    // Accepted solid-angle Jacobians: log10 histogram over [-1, 1] in 40 bins.
    std::array<uint64_t, 40> jacobian_histogram{};
    double jacobian_log_sum = 0;
    double max_weight_error = 0;        // max |sum of candidate weights - 1|
    uint64_t candidate_count_errors = 0; // |candidates| != N_D + N_G + 1
    double max_queries_per_element = 0;  // segment queries / (N_D + N_G)
    uint64_t out_of_bounds = 0;
    int pixels = 0;

    void merge(const ResidualStats &o);
    uint64_t total_started() const;
    uint64_t total_invocations() const;
    // Mean traced paths (started technique runs) per pixel.
    double paths_per_pixel() const { return pixels ? double(total_started()) / pixels : 0.0; }
    double rejection_rate() const {
        return mapping_attempts ? 1.0 - double(mapping_accepted) / mapping_attempts : 0.0;
    }
    double jacobian_percentile(double q) const;
    double jacobian_geometric_mean() const;
};

struct ResidualResult {
    Image residual;
    ResidualStats stats;
    // Per-technique layers (index = id - 1), present with technique_layers:
    // unweighted f/p_t and MIS-weighted f/sum p, signed by frame, no mapping.
    std::vector<Image> unweighted_layers, weighted_layers;
};

// Techniques whose sets are empty in the pair (ghosts under pure material
// edits, everything under an identity edit) are removed from the mask.
TechniqueMask effective_mask(const ScenePair &pair, TechniqueMask requested);

ResidualResult render_residual(const ScenePair &pair, const ResidualConfig &cfg);

} // namespace resid
