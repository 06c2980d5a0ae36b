// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace resid {

enum class TechniqueId : uint8_t {
    DynFromEmitter = 1,
    DynFromSensor = 2,
    DynTwoEnds = 3,
    GhostFromEmitter = 4,
    GhostFromSensor = 5,
    GhostTwoEnds = 6,
    PtRejected = 7,
};

inline constexpr std::array<TechniqueId, 7> AllTechniques = {
    TechniqueId::DynFromEmitter,   TechniqueId::DynFromSensor,   TechniqueId::DynTwoEnds,
    TechniqueId::GhostFromEmitter, TechniqueId::GhostFromSensor, TechniqueId::GhostTwoEnds,
    TechniqueId::PtRejected};

inline int technique_index(TechniqueId t) { return int(t) - 1; }
inline bool is_ghost_technique(TechniqueId t) {
    return t == TechniqueId::GhostFromEmitter || t == TechniqueId::GhostFromSensor ||
           t == TechniqueId::GhostTwoEnds;
}
const char *technique_name(TechniqueId t);

// Enabled techniques, bit (id - 1).
struct TechniqueMask {
    uint8_t bits = 0x7f;

    bool has(TechniqueId t) const { return bits & (1u << technique_index(t)); }
    void set(TechniqueId t, bool on) {
        if (on) bits |= uint8_t(1u << technique_index(t));
        else bits &= uint8_t(~(1u << technique_index(t)));
    }
    // Accepts digits such as "1237" or comma lists "1,2,3,7". Throws ValidationError.
    static TechniqueMask parse(const std::string &text);
    std::string to_string() const;
};

// The element a technique starts from: a dynamic vertex, a ghost crossing
// (edge index plus position in that edge's crossing list), or nothing for
// technique 7.
struct StartElement {
    int vertex = -1;
    int edge = -1;
    int crossing = -1;

    bool operator==(const StartElement &o) const {
        return vertex == o.vertex && edge == o.edge && crossing == o.crossing;
    }
    bool is_vertex() const { return vertex >= 0; }
    bool is_crossing() const { return edge >= 0; }
};

} // namespace resid
