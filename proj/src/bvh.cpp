// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#include "resid/bvh.h"

#include <algorithm>

namespace resid {

bool intersect_triangle(const Triangle &tri, const Ray &ray, double tmin, double tmax, double &t) {
    Vec3 pv = cross(ray.d, tri.e2);
    double det = dot(tri.e1, pv);
    if (det == 0) return false;
    double inv = 1.0 / det;
    Vec3 tv = ray.o - tri.p0;
    double u = dot(tv, pv) * inv;
    if (u < 0 || u > 1) return false;
    Vec3 qv = cross(tv, tri.e1);
    double v = dot(ray.d, qv) * inv;
    if (v < 0 || u + v > 1) return false;
    double tt = dot(tri.e2, qv) * inv;
    if (!(tt > tmin && tt < tmax)) return false;
    t = tt;
    return true;
}

Bvh::Bvh(const std::vector<Triangle> *tris, std::vector<int> prims)
    : tris_(tris), prims_(std::move(prims)) {
    if (prims_.empty()) return;
    nodes_.reserve(2 * prims_.size());
    build(0, int(prims_.size()));
}

namespace {

struct Bounds {
    Vec3 lo{Infinity, Infinity, Infinity}, hi{-Infinity, -Infinity, -Infinity};
    void grow(const Vec3 &p) {
        lo = min(lo, p);
        hi = max(hi, p);
    }
    void grow(const Bounds &b) {
        lo = min(lo, b.lo);
        hi = max(hi, b.hi);
    }
    double area() const {
        if (lo.x > hi.x) return 0;
        Vec3 e = hi - lo;
        return 2 * (e.x * e.y + e.y * e.z + e.z * e.x);
    }
};

Bounds tri_bounds(const Triangle &t) {
    Bounds b;
    b.grow(t.p0);
    b.grow(t.p1());
    b.grow(t.p2());
    return b;
}

Vec3 centroid(const Triangle &t) { return t.p0 + (t.e1 + t.e2) / 3.0; }

} // namespace

int Bvh::build(int begin, int end) {
    constexpr int Bins = 16;
    constexpr int MaxLeaf = 4;
    int index = int(nodes_.size());
    nodes_.push_back({});
    Bounds box, cbox;
    for (int i = begin; i < end; ++i) {
        const Triangle &tri = (*tris_)[prims_[i]];
        box.grow(tri_bounds(tri));
        cbox.grow(centroid(tri));
    }
    nodes_[index].lo = box.lo;
    nodes_[index].hi = box.hi;

    const int n = end - begin;
    auto make_leaf = [&] {
        nodes_[index].first = begin;
        nodes_[index].count = n;
        return index;
    };
    if (n <= 1) return make_leaf();

    // Binned SAH over all three axes; cost in units of one triangle test.
    double best_cost = Infinity;
    int best_axis = -1, best_split = 0;
    for (int axis = 0; axis < 3; ++axis) {
        double extent = cbox.hi[axis] - cbox.lo[axis];
        if (!(extent > 0)) continue;
        Bounds bins[Bins];
        int counts[Bins] = {};
        for (int i = begin; i < end; ++i) {
            const Triangle &tri = (*tris_)[prims_[i]];
            int b = std::min(Bins - 1, int(Bins * (centroid(tri)[axis] - cbox.lo[axis]) / extent));
            ++counts[b];
            bins[b].grow(tri_bounds(tri));
        }
        double right_area[Bins];
        int right_count[Bins];
        Bounds acc;
        int c = 0;
        for (int b = Bins - 1; b > 0; --b) {
            acc.grow(bins[b]);
            c += counts[b];
            right_area[b] = acc.area();
            right_count[b] = c;
        }
        acc = Bounds{};
        c = 0;
        for (int b = 0; b < Bins - 1; ++b) {
            acc.grow(bins[b]);
            c += counts[b];
            if (c == 0 || right_count[b + 1] == 0) continue;
            double cost = 0.5 + (acc.area() * c + right_area[b + 1] * right_count[b + 1]) / box.area();
            if (cost < best_cost) {
                best_cost = cost;
                best_axis = axis;
                best_split = b + 1;
            }
        }
    }
    if (best_axis < 0 || (n <= MaxLeaf && best_cost >= n)) return make_leaf();

    const double lo = cbox.lo[best_axis], extent = cbox.hi[best_axis] - lo;
    int *mid = std::partition(prims_.data() + begin, prims_.data() + end, [&](int prim) {
        int b = std::min(Bins - 1, int(Bins * (centroid((*tris_)[prim])[best_axis] - lo) / extent));
        return b < best_split;
    });
    int m = int(mid - prims_.data());
    build(begin, m);
    int right = build(m, end);
    nodes_[index].first = right;
    nodes_[index].count = 0;
    nodes_[index].axis = best_axis;
    return index;
}

namespace {

inline bool slab(const Vec3 &lo, const Vec3 &hi, const Vec3 &o, const Vec3 &inv, double tmin,
                 double tmax) {
    for (int a = 0; a < 3; ++a) {
        double t0 = (lo[a] - o[a]) * inv[a];
        double t1 = (hi[a] - o[a]) * inv[a];
        if (t0 > t1) std::swap(t0, t1);
        // NaN from 0 * inf leaves the bound untouched.
        tmin = t0 > tmin ? t0 : tmin;
        tmax = t1 < tmax ? t1 : tmax;
        if (tmin > tmax) return false;
    }
    return true;
}

} // namespace

template <class Visit>
void Bvh::traverse(const Ray &ray, double tmin, double &tmax, Visit &&visit) const {
    if (nodes_.empty()) return;
    Vec3 inv{1 / ray.d.x, 1 / ray.d.y, 1 / ray.d.z};
    int stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node &node = nodes_[stack[--top]];
        // Slightly padded box test so hits on box faces are not lost to rounding.
        if (!slab(node.lo, node.hi, ray.o, inv, tmin * 0.999999, tmax * 1.000001 + 1e-12)) continue;
        if (node.count > 0) {
            for (int i = node.first; i < node.first + node.count; ++i)
                if (visit(prims_[i])) return;
        } else {
            // Near child on top of the stack so closest-hit queries shrink tmax early.
            int left = int(&node - nodes_.data()) + 1, right = node.first;
            if (ray.d[node.axis] < 0) std::swap(left, right);
            stack[top++] = right;
            stack[top++] = left;
        }
    }
}

TriangleHit Bvh::closest(const Ray &ray, double tmin, double tmax, uint8_t mask, int exclude0,
                         int exclude1) const {
    TriangleHit hit;
    double limit = tmax;
    traverse(ray, tmin, limit, [&](int prim) {
        if (prim == exclude0 || prim == exclude1) return false;
        const Triangle &tri = (*tris_)[prim];
        if (!(tri.presence & mask)) return false;
        double t;
        if (intersect_triangle(tri, ray, tmin, limit, t)) {
            if (t < hit.t) {
                hit.t = t;
                hit.prim = prim;
            }
            limit = t;
        }
        return false;
    });
    return hit;
}

bool Bvh::any(const Ray &ray, double tmin, double tmax, uint8_t mask, int exclude0,
              int exclude1) const {
    bool found = false;
    double limit = tmax;
    traverse(ray, tmin, limit, [&](int prim) {
        if (prim == exclude0 || prim == exclude1) return false;
        const Triangle &tri = (*tris_)[prim];
        if (!(tri.presence & mask)) return false;
        double t;
        if (intersect_triangle(tri, ray, tmin, tmax, t)) {
            found = true;
            return true;
        }
        return false;
    });
    return found;
}

void Bvh::all(const Ray &ray, double tmin, double tmax, uint8_t mask,
              std::vector<TriangleHit> &out) const {
    double limit = tmax;
    traverse(ray, tmin, limit, [&](int prim) {
        const Triangle &tri = (*tris_)[prim];
        if (!(tri.presence & mask)) return false;
        double t;
        if (intersect_triangle(tri, ray, tmin, tmax, t)) out.push_back({t, prim});
        return false;
    });
}

} // namespace resid
