// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "resid/path.h"

namespace resid {

enum class PdfDirection { TowardEmitter, TowardSensor };

// Prefix products of a path's per-vertex forward and reverse pdfs. Zero
// entries are tracked by count so a single zero does not poison the prefix.
class PdfTables {
  public:
    static PdfTables build(const Path &path);

    // Product of pdf_fwd[m] (TowardEmitter) or pdf_rev[m] (TowardSensor) for m in [i, j).
    // Throws StructuralError for indices outside [0, k].
    double query(int i, int j, PdfDirection dir) const;

    int size() const { return int(fwd_.size()) - 1; }
    mutable int queries = 0;

  private:
    struct Prefix {
        double product = 1;
        int zeros = 0;
    };
    std::vector<Prefix> fwd_, rev_;
};

} // namespace resid
