// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "resid/primal.h"

namespace resid {

// Residual new - old with both views driven by one variate stream per
// (pixel, sample). The old view runs on a copy of the stream, so the two
// paths share every draw up to the point where they diverge and then keep
// consuming their own copies; each side is exactly the primal estimator.
RenderResult render_residual_correlated(const ScenePair &pair, const PathTracerConfig &cfg);

// Difference of two independently seeded renders, the uncorrelated baseline.
RenderResult render_residual_independent(const ScenePair &pair, const PathTracerConfig &cfg);

} // namespace resid
