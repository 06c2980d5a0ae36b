// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#include "resid/pdf_tables.h"

#include <fmt/format.h>

#include "resid/error.h"

namespace resid {

PdfTables PdfTables::build(const Path &path) {
    const int k = path.size();
    if (int(path.pdf_fwd.size()) != k || int(path.pdf_rev.size()) != k)
        throw StructuralError("build_pdf_tables: path has no pdf records");
    PdfTables t;
    t.fwd_.resize(k + 1);
    t.rev_.resize(k + 1);
    for (int m = 0; m < k; ++m) {
        auto step = [](const Prefix &prev, double pdf) {
            Prefix next = prev;
            if (pdf == 0) ++next.zeros;
            else next.product *= pdf;
            return next;
        };
        t.fwd_[m + 1] = step(t.fwd_[m], path.pdf_fwd[m]);
        t.rev_[m + 1] = step(t.rev_[m], path.pdf_rev[m]);
    }
    return t;
}

double PdfTables::query(int i, int j, PdfDirection dir) const {
    if (i < 0 || j < i || j >= int(fwd_.size()))
        throw StructuralError(fmt::format("query_segment_pdf: range [{}, {}) out of bounds", i, j));
    ++queries;
    const auto &tab = dir == PdfDirection::TowardEmitter ? fwd_ : rev_;
    if (tab[j].zeros != tab[i].zeros) return 0;
    return tab[j].product / tab[i].product;
}

} // namespace resid
