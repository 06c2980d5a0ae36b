// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "resid/math.h"

namespace resid {

// Pinhole camera with a box pixel filter. Raster coordinates run x to the
// right and y downward, pixel (i, j) covering [i, i+1) x [j, j+1).
//
// The camera vertex has position pdf 1. The directional importance of pixel
// j is W(w) = 1 / (A_pix cos^3 theta) inside the pixel footprint on the unit
// image plane, so a light path connected to the camera contributes
// W * G(x_E, x_1) * (rest of the path) / pdf to exactly one pixel.
class Camera {
  public:
    Camera() = default;
    Camera(const Vec3 &position, const Vec3 &target, const Vec3 &up, double vfov_degrees,
           int width, int height);

    const Vec3 &position() const { return position_; }
    const Vec3 &forward() const { return forward_; }
    const Vec3 &up_hint() const { return up_hint_; }
    int width() const { return width_; }
    int height() const { return height_; }
    double vfov_degrees() const { return vfov_; }
    int pixel_count() const { return width_ * height_; }

    // Unit direction through a raster position.
    Vec3 direction(Vec2 raster) const;
    // Raster position of a world point, or nothing when behind the camera or off-screen.
    std::optional<Vec2> project(const Vec3 &p) const;
    // Same, for a direction leaving the camera.
    std::optional<Vec2> project_direction(const Vec3 &w) const;

    // Image-plane area at unit distance, and the area of one pixel there.
    double film_area() const { return 4 * tan_half_ * tan_half_ * aspect_; }
    double pixel_area() const { return film_area() / pixel_count(); }

    double cos_theta(const Vec3 &w) const { return dot(w, forward_); }
    // Per-pixel importance W for a direction of the given cosine.
    double importance(double cos_theta) const {
        return 1.0 / (pixel_area() * cos_theta * cos_theta * cos_theta);
    }
    // Solid-angle density of a direction when the raster position is uniform over the whole image.
    double image_direction_pdf(double cos_theta) const {
        return 1.0 / (film_area() * cos_theta * cos_theta * cos_theta);
    }

    Camera with_resolution(int width, int height) const;

  private:
    Vec3 position_, forward_{0, 0, 1}, right_{1, 0, 0}, up_{0, 1, 0};
    double vfov_ = 40, tan_half_ = 0, aspect_ = 1;
    int width_ = 0, height_ = 0;
    Vec3 target_, up_hint_;
};

} // namespace resid
