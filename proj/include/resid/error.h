// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace resid {

// Malformed input (scene file, config, mismatched image sizes). Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// File-system level failure. Maps to CLI exit code 3.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Violated internal contract (e.g. sampling from an empty surface set,
// zero MIS denominator for a produced path).
class StructuralError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

} // namespace resid
