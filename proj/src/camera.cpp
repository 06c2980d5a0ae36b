// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#include "resid/camera.h"

namespace resid {

Camera::Camera(const Vec3 &position, const Vec3 &target, const Vec3 &up, double vfov_degrees,
               int width, int height)
    : position_(position), vfov_(vfov_degrees), width_(width), height_(height), target_(target),
      up_hint_(up) {
    forward_ = normalize(target - position);
    right_ = normalize(cross(forward_, up));
    up_ = cross(right_, forward_);
    tan_half_ = std::tan(vfov_degrees * Pi / 360.0);
    aspect_ = double(width) / double(height);
}

Camera Camera::with_resolution(int width, int height) const {
    return Camera(position_, target_, up_hint_, vfov_, width, height);
}

Vec3 Camera::direction(Vec2 raster) const {
    double sx = (2 * raster.x / width_ - 1) * tan_half_ * aspect_;
    double sy = (1 - 2 * raster.y / height_) * tan_half_;
    return normalize(forward_ + right_ * sx + up_ * sy);
}

std::optional<Vec2> Camera::project_direction(const Vec3 &w) const {
    double z = dot(w, forward_);
    if (z <= 0) return std::nullopt;
    double sx = dot(w, right_) / z / (tan_half_ * aspect_);
    double sy = dot(w, up_) / z / tan_half_;
    Vec2 r{(sx + 1) * 0.5 * width_, (1 - sy) * 0.5 * height_};
    if (!(r.x >= 0 && r.x < width_ && r.y >= 0 && r.y < height_)) return std::nullopt;
    return r;
}

std::optional<Vec2> Camera::project(const Vec3 &p) const { return project_direction(p - position_); }

} // namespace resid
