// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "resid/pdf_tables.h"
#include "resid/technique_id.h"

namespace resid {

struct Candidate {
    TechniqueId technique;
    StartElement start;
    double pdf = 0;
};

// Every (technique, start element) able to produce a dynamic path: one entry
// per dynamic vertex, one per ghost crossing, and technique 7. Ordered along
// the path from the camera, technique 7 last.
struct CandidateSet {
    std::vector<Candidate> entries;
    int n_dynamic = 0;
    int n_crossings = 0;
    int segment_queries = 0;

    double total() const;
    const Candidate *find(TechniqueId t, const StartElement &s) const;
};

// Which technique owns a dynamic vertex / a ghost crossing at a given position.
TechniqueId technique_for_vertex(int vertex, int path_size);
TechniqueId technique_for_edge(int edge, int path_size);

// Disabled techniques keep their entry with pdf 0.
CandidateSet enumerate_candidates(const ScenePair &pair, const Path &path, const PdfTables &tables,
                                  TechniqueMask mask = {});

// Balance heuristic. Throws StructuralError if the producer is absent or the sum is zero.
double mis_weight(const CandidateSet &set, TechniqueId producer, const StartElement &start);

} // namespace resid
