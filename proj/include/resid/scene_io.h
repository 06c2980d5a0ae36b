// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "resid/scene.h"

namespace resid {

// Parsed scene-pair description. The schema is documented in docs/scene_format.md.
struct SceneFile {
    Scene base;
    std::vector<Edit> edits;
    std::string text; // raw file content, used as the cache key for references
};

// Throws IoError when the file (or a referenced OBJ) cannot be read and
// ValidationError with a line or field diagnostic when the content is malformed.
SceneFile load_scene_file(const std::string &path);
SceneFile parse_scene_text(const std::string &text, const std::string &base_dir = ".");

std::string serialize_scene(const Scene &base, const std::vector<Edit> &edits);
void save_scene_file(const std::string &path, const Scene &base, const std::vector<Edit> &edits);

// Wavefront OBJ: v and f records only; polygons are fan-triangulated, vertex normals ignored.
std::vector<std::array<Vec3, 3>> load_obj(const std::string &path);

} // namespace resid
