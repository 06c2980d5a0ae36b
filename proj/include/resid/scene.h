// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <atomic>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "resid/bsdf.h"
#include "resid/bvh.h"
#include "resid/camera.h"

namespace resid {

enum class FrameId : uint8_t { Old = 0, New = 1 };

inline FrameId other(FrameId f) { return f == FrameId::Old ? FrameId::New : FrameId::Old; }
inline uint8_t frame_bit(FrameId f) { return uint8_t(1u << unsigned(f)); }
inline const char *frame_name(FrameId f) { return f == FrameId::Old ? "old" : "new"; }
// +1 for samples living in the new frame, -1 for the old one.
inline double frame_sign(FrameId f) { return f == FrameId::New ? 1.0 : -1.0; }

struct RigidTransform {
    Mat3 rotation;
    Vec3 translation;

    Vec3 apply(const Vec3 &p) const { return rotation * p + translation; }
    Vec3 apply_direction(const Vec3 &d) const { return rotation * d; }
    RigidTransform inverse() const {
        Mat3 rt = rotation.transposed();
        return {rt, -(rt * translation)};
    }
    bool is_identity() const {
        return rotation.is_identity() && translation == Vec3{0, 0, 0};
    }
};

struct SceneObject {
    std::string name;
    std::vector<std::array<Vec3, 3>> triangles;
    int material = 0;
};

struct Emitter {
    int object = -1;
    Rgb radiance;
};

// Static description of one scene state.
struct Scene {
    std::vector<Material> materials;
    std::vector<SceneObject> objects;
    std::vector<Emitter> emitters;
    Camera camera;

    int find_object(const std::string &name) const;
    int find_material(const std::string &name) const;
};

struct Edit {
    int object = -1;
    std::optional<RigidTransform> transform;
    std::optional<int> material;
};

struct HitRecord {
    Vec3 p;
    Vec3 n;  // geometric normal (winding side)
    Vec3 ns; // shading normal; equal to n because shading is flat
    double t = 0;
    int prim = -1;
    int material = -1;
    bool dynamic = false;
};

struct GhostCrossing {
    Vec3 p;
    Vec3 n;
    int prim = -1; // shape id: the ghost triangle instance
    double t = 0;  // distance from the first segment endpoint
};

enum class SurfaceSet { Dynamic, Ghost, Emitter };

struct SurfaceSample {
    Vec3 p;
    Vec3 n;
    int prim = -1;
    double pdf = 0; // area measure
};

// Ray and query statistics; relaxed atomics so concurrent queries stay cheap.
struct QueryCounters {
    mutable std::atomic<uint64_t> rays{0};
    mutable std::atomic<uint64_t> crossing_queries{0};
};

// Old and new scene states sharing static geometry.
//
// Every triangle instance carries a presence mask. Static triangles are solid
// in both frames; a moved object contributes an old-placement instance (solid
// only in the old frame) and a new-placement instance (solid only in the new
// frame). Seen from frame F, the dynamic set D_F is every edited instance
// solid in F, and the ghost set G_F is every moved instance solid only in
// the other frame. The pair is immutable after construction.
class ScenePair {
  public:
    // Validates and derives both states. Throws ValidationError.
    ScenePair(Scene base, std::vector<Edit> edits);
    ScenePair(const ScenePair &) = delete;
    ScenePair &operator=(const ScenePair &) = delete;

    const Scene &base() const { return base_; }
    const std::vector<Edit> &edits() const { return edits_; }
    const Camera &camera() const { return camera_; }
    void set_resolution(int width, int height) { camera_ = camera_.with_resolution(width, height); }

    double diagonal() const { return diagonal_; }
    double ray_epsilon() const { return epsilon_; }

    const std::vector<Triangle> &triangles() const { return tris_; }
    const Triangle &triangle(int prim) const { return tris_[prim]; }
    const Material &material(int prim, FrameId f) const {
        return materials_[tris_[prim].material[int(f)]];
    }
    const std::vector<Material> &materials() const { return materials_; }
    bool solid(int prim, FrameId f) const { return tris_[prim].presence & frame_bit(f); }

    // Emitted radiance leaving emitter triangle prim toward direction w (front face only).
    Rgb emitted(int prim, const Vec3 &w) const;
    bool is_emitter(int prim) const { return tris_[prim].emitter >= 0; }

    std::optional<HitRecord> intersect(const Ray &ray, FrameId view, int exclude = -1) const;
    // Mutual visibility of two surface points (either prim may be -1 for the camera).
    bool visible(const Vec3 &a, int prim_a, const Vec3 &b, int prim_b, FrameId view) const;
    // True if the segment is blocked by geometry of the dynamic-only structure solid in view.
    bool dynamic_blocks(const Vec3 &a, int prim_a, const Vec3 &b, int prim_b, FrameId view) const;
    // Crossings of the open segment with the ghost set of frame f, ordered from a.
    std::vector<GhostCrossing> ghost_crossings(const Vec3 &a, const Vec3 &b, FrameId f) const;

    double surface_area(SurfaceSet set, FrameId f) const { return sets_[set_index(set, f)].total; }
    // Area-uniform point on the set. Throws StructuralError for an empty set.
    SurfaceSample sample_surface(SurfaceSet set, FrameId f, Vec2 u) const;

    bool has_dynamic() const { return has_dynamic_; }
    bool has_ghosts() const { return has_ghosts_; }

    // Rigid correspondence between the two placements of a moved triangle.
    Vec3 map_to_twin(int prim, const Vec3 &p) const;
    Vec3 map_direction_to_twin(int prim, const Vec3 &d) const;

    const QueryCounters &counters() const { return counters_; }

    HitRecord make_hit(int prim, const Vec3 &p, double t, FrameId view) const;

  private:
    struct AreaSet {
        std::vector<int> prims;
        std::vector<double> cdf;
        double total = 0;
    };
    static int set_index(SurfaceSet s, FrameId f) { return int(s) * 2 + int(f); }
    void add_object_instances(int object, const RigidTransform *xf, uint8_t presence,
                              bool dynamic, bool moved, int mat_old, int mat_new);

    Scene base_;
    std::vector<Edit> edits_;
    Camera camera_;
    std::vector<Material> materials_;
    std::vector<Triangle> tris_;
    std::vector<RigidTransform> to_new_; // per object, identity when not moved
    AreaSet sets_[6];
    Bvh full_, dynamic_, ghost_;
    double diagonal_ = 1, epsilon_ = 1e-4;
    bool has_dynamic_ = false, has_ghosts_ = false;
    QueryCounters counters_;
};

// |cos x| |cos y| / |x - y|^2
double geometric_term(const Vec3 &x, const Vec3 &nx, const Vec3 &y, const Vec3 &ny);

} // namespace resid
