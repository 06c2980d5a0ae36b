// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#include "resid/film.h"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include <fmt/format.h>

#include "resid/error.h"

namespace resid {

Image &Image::operator+=(const Image &o) {
    if (!same_size(o)) throw ValidationError("image size mismatch");
    for (size_t i = 0; i < pixels.size(); ++i) pixels[i] += o.pixels[i];
    return *this;
}

Image Image::operator-(const Image &o) const {
    if (!same_size(o)) throw ValidationError("image size mismatch");
    Image r(width, height);
    for (size_t i = 0; i < pixels.size(); ++i) r.pixels[i] = pixels[i] - o.pixels[i];
    return r;
}

Image Image::operator*(double s) const {
    Image r(width, height);
    for (size_t i = 0; i < pixels.size(); ++i) r.pixels[i] = pixels[i] * s;
    return r;
}

SignedFilm::SignedFilm(int width, int height)
    : width_(width), height_(height), pixel_(size_t(width) * height), light_(size_t(width) * height) {}

void SignedFilm::splat(Vec2 pos, const Rgb &value, SplatKind kind) {
    ++splats_;
    if (!(pos.x >= 0 && pos.y >= 0 && pos.x < width_ && pos.y < height_)) {
        ++out_of_bounds_;
        return;
    }
    size_t i = size_t(int(pos.y)) * width_ + size_t(int(pos.x));
    (kind == SplatKind::PixelEstimate ? pixel_ : light_)[i] += value;
}

void SignedFilm::merge(const SignedFilm &o) {
    if (o.width_ != width_ || o.height_ != height_) throw ValidationError("film size mismatch");
    for (size_t i = 0; i < pixel_.size(); ++i) {
        pixel_[i] += o.pixel_[i];
        light_[i] += o.light_[i];
    }
    splats_ += o.splats_;
    out_of_bounds_ += o.out_of_bounds_;
}

Image SignedFilm::resolve() const {
    Image img(width_, height_);
    double sp = pixel_norm_ > 0 ? 1.0 / pixel_norm_ : 0.0;
    double sl = light_norm_ > 0 ? 1.0 / light_norm_ : 0.0;
    for (size_t i = 0; i < pixel_.size(); ++i) {
        if ((!pixel_[i].is_black() && sp == 0) || (!light_[i].is_black() && sl == 0))
            throw StructuralError("SignedFilm::resolve: data present without a normalizer");
        img.pixels[i] = pixel_[i] * sp + light_[i] * sl;
    }
    return img;
}

Image composite(const Image &old_frame, const Image &residual) {
    if (!old_frame.same_size(residual))
        throw ValidationError(fmt::format("composite: old frame is {}x{}, residual is {}x{}",
                                          old_frame.width, old_frame.height, residual.width,
                                          residual.height));
    Image out = old_frame;
    out += residual;
    return out;
}

namespace {

bool host_little_endian() {
    uint16_t v = 1;
    unsigned char b;
    std::memcpy(&b, &v, 1);
    return b == 1;
}

uint32_t byteswap(uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

} // namespace

void write_pfm(const Image &img, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "PF\n" << img.width << " " << img.height << "\n-1.0\n";
    const bool swap = !host_little_endian();
    std::vector<uint32_t> row(size_t(img.width) * 3);
    for (int y = img.height - 1; y >= 0; --y) {
        for (int x = 0; x < img.width; ++x) {
            const Rgb &c = img.at(x, y);
            for (int ch = 0; ch < 3; ++ch) {
                float f = float(c[ch]);
                uint32_t bits;
                std::memcpy(&bits, &f, 4);
                row[size_t(x) * 3 + ch] = swap ? byteswap(bits) : bits;
            }
        }
        out.write(reinterpret_cast<const char *>(row.data()), std::streamsize(row.size() * 4));
    }
    if (!out) throw IoError("write to '" + path + "' failed");
}

Image read_pfm(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string magic;
    int w = 0, h = 0;
    double scale = 0;
    in >> magic >> w >> h >> scale;
    if (!in || magic != "PF" || w <= 0 || h <= 0 || scale == 0)
        throw IoError("'" + path + "': malformed PFM header");
    in.get(); // single whitespace byte before the payload
    const bool file_le = scale < 0;
    const bool swap = file_le != host_little_endian();
    Image img(w, h);
    std::vector<uint32_t> row(size_t(w) * 3);
    for (int y = h - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char *>(row.data()), std::streamsize(row.size() * 4));
        if (!in) throw IoError("'" + path + "': truncated PFM payload");
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < 3; ++ch) {
                uint32_t bits = row[size_t(x) * 3 + ch];
                if (swap) bits = byteswap(bits);
                float f;
                std::memcpy(&f, &bits, 4);
                img.at(x, y)[ch] = f;
            }
    }
    return img;
}

double srgb_encode(double v) {
    v = std::clamp(v, 0.0, 1.0);
    return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

void write_png(const Image &img, const std::string &path, double exposure) {
    std::FILE *fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw IoError("cannot open '" + path + "' for writing");
    std::unique_ptr<std::FILE, int (*)(std::FILE *)> guard(fp, &std::fclose);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialization failed");
    }
    std::vector<unsigned char> buf(size_t(img.width) * img.height * 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int ch = 0; ch < 3; ++ch) {
                double v = srgb_encode(img.at(x, y)[ch] * exposure);
                buf[(size_t(y) * img.width + x) * 3 + ch] = (unsigned char)std::lround(v * 255.0);
            }
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y) rows[y] = buf.data() + size_t(y) * img.width * 3;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng failed writing '" + path + "'");
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_sRGB(png, info, PNG_sRGB_INTENT_PERCEPTUAL);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

static bool ends_with(const std::string &s, const std::string &suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void write_image(const Image &img, const std::string &path, double exposure) {
    if (ends_with(path, ".png")) write_png(img, path, exposure);
    else write_pfm(img, path);
}

Image read_image(const std::string &path) {
    if (ends_with(path, ".png")) throw IoError("'" + path + "': PNG is presentation-only; use PFM");
    return read_pfm(path);
}

} // namespace resid
