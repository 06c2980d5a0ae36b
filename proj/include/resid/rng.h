// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>

#include "resid/math.h"

namespace resid {

inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline uint64_t hash_keys(std::initializer_list<uint64_t> keys) {
    uint64_t h = 0x84222325cbf29ce4ull;
    for (uint64_t k : keys) h = mix64(h ^ mix64(k));
    return h;
}

// Counter-based variate stream. A stream is a pure function of its key, so
// copying a Sampler forks an identical sequence; this is what lets the
// correlated renderer run both views in lockstep.
class Sampler {
  public:
    Sampler() = default;
    explicit Sampler(uint64_t key) : key_(key) {}
    Sampler(uint64_t seed, std::initializer_list<uint64_t> ids)
        : key_(mix64(seed) ^ hash_keys(ids)) {}

    double next() {
        uint64_t bits = mix64(key_ ^ mix64(counter_++ * 0xd1342543de82ef95ull));
        return double(bits >> 11) * 0x1.0p-53;
    }
    Vec2 next2() {
        double a = next();
        return {a, next()};
    }
    uint64_t position() const { return counter_; }

  private:
    uint64_t key_ = 0;
    uint64_t counter_ = 0;
};

} // namespace resid
