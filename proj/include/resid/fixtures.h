// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "resid/scene.h"

namespace resid {

// A named scene pair: base state plus the edits producing the new state.
struct Fixture {
    std::string name;
    Scene base;
    std::vector<Edit> edits;
};

// Cornell-box scene pairs used by the tests and experiments:
//   cornell-move              small box shifted 40 units to the image right
//   cornell-multi-{1,2,4,8}   k small cubes, each shifted 30 units
//   cornell-displace-{40,100,160,220}
//                             a small box shifted by d units
//   cornell-material-{color,roughness,metal}
//                             material-only edits of the small box
//   occluder-reveal           a cube slides out from behind a partition
std::vector<Fixture> make_fixtures(int resolution = 128);
Fixture make_fixture(const std::string &name, int resolution = 128);

// Writes every fixture as <dir>/<name>.json; returns the written paths.
std::vector<std::string> build_fixtures(const std::string &dir, int resolution = 128);

} // namespace resid
