// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "resid/math.h"

namespace resid {

struct Ray {
    Vec3 o, d;
};

// Triangle instance as stored by a ScenePair. Moved objects contribute two
// instances (old and new placement) that reference each other through twin.
struct Triangle {
    Vec3 p0, e1, e2;
    Vec3 n; // unit geometric normal from the winding order
    double area = 0;
    int object = -1;
    int twin = -1;
    uint8_t presence = 0; // bit 0: solid in the old frame, bit 1: solid in the new frame
    bool dynamic = false;
    bool moved = false;
    int material[2] = {-1, -1};
    int emitter = -1;

    Vec3 p1() const { return p0 + e1; }
    Vec3 p2() const { return p0 + e2; }
};

struct TriangleHit {
    double t = Infinity;
    int prim = -1;
};

// Moller-Trumbore, double precision. Returns true with t in (tmin, tmax).
bool intersect_triangle(const Triangle &tri, const Ray &ray, double tmin, double tmax, double &t);

// Binary BVH (binned SAH) over a subset of a triangle array. Queries take a presence mask
// and an excluded primitive, so a single structure serves both frames.
class Bvh {
  public:
    Bvh() = default;
    Bvh(const std::vector<Triangle> *tris, std::vector<int> prims);

    TriangleHit closest(const Ray &ray, double tmin, double tmax, uint8_t mask, int exclude0,
                        int exclude1 = -1) const;
    bool any(const Ray &ray, double tmin, double tmax, uint8_t mask, int exclude0,
             int exclude1 = -1) const;
    // Every hit in (tmin, tmax), unsorted.
    void all(const Ray &ray, double tmin, double tmax, uint8_t mask,
             std::vector<TriangleHit> &out) const;

    bool empty() const { return prims_.empty(); }
    size_t size() const { return prims_.size(); }

  private:
    struct Node {
        Vec3 lo, hi;
        int first = 0;  // leaf: first index into prims_; interior: right child
        int count = 0;  // > 0 for leaves
        int axis = 0;   // split axis of an interior node
    };

    int build(int begin, int end);
    template <class Visit>
    void traverse(const Ray &ray, double tmin, double &tmax, Visit &&visit) const;

    const std::vector<Triangle> *tris_ = nullptr;
    std::vector<int> prims_;
    std::vector<Node> nodes_;
};

} // namespace resid
