// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "resid/math.h"

namespace resid {

// Resolved linear HDR image. Values may be negative (residuals).
struct Image {
    int width = 0, height = 0;
    std::vector<Rgb> pixels;

    Image() = default;
    Image(int w, int h) : width(w), height(h), pixels(size_t(w) * h) {}

    Rgb &at(int x, int y) { return pixels[size_t(y) * width + x]; }
    const Rgb &at(int x, int y) const { return pixels[size_t(y) * width + x]; }
    bool same_size(const Image &o) const { return width == o.width && height == o.height; }

    Image &operator+=(const Image &o);
    Image operator-(const Image &o) const;
    Image operator*(double s) const;
};

enum class SplatKind {
    PixelEstimate, // normalized by samples per pixel
    LightSplat,    // normalized by the total number of paths traced
};

// Signed accumulation buffer with separate pixel-estimate and light-splat
// layers. Each worker owns one; merge() adds them elementwise.
class SignedFilm {
  public:
    SignedFilm() = default;
    SignedFilm(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }

    // Box filter: deposits into the pixel containing `pos`. Positions outside
    // the image are dropped and counted.
    void splat(Vec2 pos, const Rgb &value, SplatKind kind);
    void add_pixel(int x, int y, const Rgb &value) { pixel_[size_t(y) * width_ + x] += value; }
    void merge(const SignedFilm &o);

    // Normalizers; both must be positive for any layer that holds data.
    void set_pixel_normalizer(double n) { pixel_norm_ = n; }
    void set_light_normalizer(double n) { light_norm_ = n; }
    double pixel_normalizer() const { return pixel_norm_; }
    double light_normalizer() const { return light_norm_; }

    Image resolve() const;

    uint64_t splat_count() const { return splats_; }
    uint64_t out_of_bounds() const { return out_of_bounds_; }

  private:
    int width_ = 0, height_ = 0;
    std::vector<Rgb> pixel_, light_;
    double pixel_norm_ = 0, light_norm_ = 0;
    uint64_t splats_ = 0, out_of_bounds_ = 0;
};

// Old frame plus residual. Throws ValidationError on a size mismatch.
Image composite(const Image &old_frame, const Image &residual);

// PFM: "PF", little-endian scale -1, rows stored bottom-up, float32 payload.
void write_pfm(const Image &img, const std::string &path);
Image read_pfm(const std::string &path);
// sRGB 8-bit with exposure scaling; negatives clamp to 0.
void write_png(const Image &img, const std::string &path, double exposure = 1.0);
void write_image(const Image &img, const std::string &path, double exposure = 1.0);
Image read_image(const std::string &path);

double srgb_encode(double linear);

} // namespace resid
