// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "resid/correlated.h"
#include "resid/error.h"
#include "resid/harness.h"
#include "resid/metrics.h"
#include "resid/primal.h"
#include "test_util.h"

using namespace resid;
using namespace resid::testing;

namespace {

// Floor of half-size 500 at y = 0 under a square emitter of half-size `s`
// at height `h`, facing down. The camera hangs at height `cam_h` looking
// straight down with a narrow field of view.
SceneBuilder lit_floor(double s, double h, double cam_h, double vfov, int res, Material floor_mat) {
    SceneBuilder b;
    b.scene.materials[0] = floor_mat;
    b.scene.materials[0].name = "floor";
    b.add(quad({-500, 0, -500}, {-500, 0, 500}, {500, 0, 500}, {500, 0, -500}));
    b.add_emitter(quad({-s, h, -s}, {s, h, -s}, {s, h, s}, {-s, h, s}), Rgb(10.0));
    b.scene.camera = Camera({0, cam_h, 0}, {0, 0, 0}, {0, 0, 1}, vfov, res, res);
    return b;
}

Material lambert(double albedo) {
    Material m;
    m.type = MaterialType::Lambertian;
    m.albedo = Rgb(albedo);
    return m;
}

// Luminance of a pixel mean and the variance of that mean.
struct Stat {
    double mean = 0, var = 0;
};

Stat luminance_stat(const RenderResult &r, int pixel) {
    return {r.mean.pixels[pixel].luminance(), r.variance.pixels[pixel].luminance()};
}

} // namespace

TEST_CASE("pt: no emitters renders black") {
    SceneBuilder b;
    // Closed cube around the camera.
    const double L = 10;
    b.add(quad({-L, -L, -L}, {L, -L, -L}, {L, -L, L}, {-L, -L, L}));
    b.add(quad({-L, L, -L}, {-L, L, L}, {L, L, L}, {L, L, -L}));
    b.add(quad({-L, -L, L}, {L, -L, L}, {L, L, L}, {-L, L, L}));
    b.add(quad({-L, -L, -L}, {-L, L, -L}, {L, L, -L}, {L, -L, -L}));
    b.add(quad({L, -L, -L}, {L, L, -L}, {L, L, L}, {L, -L, L}));
    b.add(quad({-L, -L, -L}, {-L, -L, L}, {-L, L, L}, {-L, L, -L}));
    b.scene.camera = Camera({0, 0, 0}, {0, 0, 1}, {0, 1, 0}, 60, 8, 8);
    auto pair = b.build();
    PathTracerConfig cfg;
    cfg.spp = 8;
    RenderResult r = render(*pair, FrameId::New, cfg);
    for (const Rgb &p : r.mean.pixels) CHECK(p.is_black());
}

TEST_CASE("pt: direct lighting from a small source matches the closed form") {
    // Emitter of side 2 at height 100; the footprint of an 8x8 image with a
    // 2 degree field of view is about 1.7 units across.
    const double s = 1, h = 100, rho = 0.5;
    auto pair = lit_floor(s, h, 50, 2, 8, lambert(rho)).build();
    PathTracerConfig cfg;
    cfg.max_vertices = 3;
    cfg.spp = 4096;
    cfg.seed = 5;
    RenderResult r = render(*pair, FrameId::New, cfg);
    const Camera &cam = pair->camera();
    const double area = 4 * s * s;
    for (int y = 0; y < cam.height(); ++y)
        for (int x = 0; x < cam.width(); ++x) {
            Vec3 d = cam.direction({x + 0.5, y + 0.5});
            Vec3 p = cam.position() + d * (cam.position().y / -d.y);
            Vec3 to_light = Vec3{0, h, 0} - p;
            double d2 = length_squared(to_light);
            double c = to_light.y / std::sqrt(d2); // equal cosines at both ends
            double expected = rho / Pi * 10.0 * c * c * area / d2;
            CAPTURE(x);
            CAPTURE(y);
            CHECK(rel_err(r.mean.at(x, y).g, expected) < 0.01);
        }
}

TEST_CASE("pt: light sampling with MIS agrees with BSDF sampling alone") {
    Material ggx;
    ggx.type = MaterialType::Ggx;
    ggx.albedo = Rgb(0.8);
    ggx.roughness = 0.3;
    for (const Material &m : {lambert(0.6), ggx}) {
        auto pair = lit_floor(20, 30, 25, 1, 1, m).build();
        PathTracerConfig cfg;
        cfg.max_vertices = 3;
        cfg.spp = 1 << 20;
        cfg.batches = 64;
        cfg.seed = 21;
        Stat with = luminance_stat(render(*pair, FrameId::New, cfg), 0);
        cfg.nee = false;
        cfg.seed = 22;
        Stat without = luminance_stat(render(*pair, FrameId::New, cfg), 0);
        CAPTURE(with.mean);
        CAPTURE(without.mean);
        CHECK(with.mean > 0);
        CHECK(std::abs(with.mean - without.mean) <= 3 * std::sqrt(with.var + without.var));
        // Light sampling should also be the lower-variance estimator here.
        CHECK(with.var < without.var);
    }
}

TEST_CASE("pt: nee_mis_weight") {
    CHECK(nee_mis_weight(0.5, 0.5) == 0.5);
    CHECK(nee_mis_weight(1.0, 0.0) == 1.0);
    Sampler s(3, {});
    for (int i = 0; i < 1000; ++i) {
        double a = s.next() * 10, b = s.next() * 10;
        CHECK(nee_mis_weight(a, b) + nee_mis_weight(b, a) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(nee_mis_weight(a, b) >= 0);
        CHECK(nee_mis_weight(a, b) <= 1);
    }
}

TEST_CASE("pt: deterministic for a fixed seed, independent of the worker count") {
    auto pair = fixture_pair("cornell-move", 16);
    PathTracerConfig cfg;
    cfg.spp = 4;
    cfg.max_vertices = 6;
    cfg.threads = 1;
    RenderResult a = render(*pair, FrameId::New, cfg);
    RenderResult b = render(*pair, FrameId::New, cfg);
    cfg.threads = 4;
    RenderResult c = render(*pair, FrameId::New, cfg);
    for (size_t i = 0; i < a.mean.pixels.size(); ++i) {
        CHECK(a.mean.pixels[i] == b.mean.pixels[i]);
        CHECK(a.mean.pixels[i] == c.mean.pixels[i]);
    }
    cfg.seed = 2;
    RenderResult d = render(*pair, FrameId::New, cfg);
    CHECK(mse(a.mean, d.mean) > 0);
}

TEST_CASE("pt: pixel values stay under the geometric-series bound") {
    // Every reflectance in the room is below rho_max per channel, so the
    // radiance of any path prefix sum is bounded by Le / (1 - rho_max).
    auto pair = fixture_pair("cornell-move", 32);
    PathTracerConfig cfg;
    cfg.spp = 64;
    cfg.max_vertices = 8;
    RenderResult r = render(*pair, FrameId::New, cfg);
    const Rgb le{17, 12, 4};
    double rho[3] = {0, 0, 0};
    for (const Material &m : pair->base().materials) {
        rho[0] = std::max(rho[0], m.albedo.r);
        rho[1] = std::max(rho[1], m.albedo.g);
        rho[2] = std::max(rho[2], m.albedo.b);
    }
    double peak = 0;
    for (const Rgb &p : r.mean.pixels) {
        CHECK(p.r >= 0);
        CHECK(p.r <= le.r / (1 - rho[0]));
        CHECK(p.g <= le.g / (1 - rho[1]));
        CHECK(p.b <= le.b / (1 - rho[2]));
        peak = std::max(peak, p.r);
    }
    CHECK(peak >= 17); // the lamp is in view
}

TEST_CASE("pt: two independent renders agree per pixel") {
    auto pair = fixture_pair("cornell-move", 24);
    PathTracerConfig cfg;
    cfg.spp = 1024;
    cfg.batches = 64;
    cfg.max_vertices = 5;
    cfg.seed = 31;
    RenderResult a = render(*pair, FrameId::New, cfg);
    cfg.seed = 32;
    RenderResult b = render(*pair, FrameId::New, cfg);
    double frac = fraction_within(a.mean, a.variance, b.mean, b.variance, 3.0);
    CAPTURE(frac);
    CHECK(frac >= 0.99);
}

TEST_CASE("trace_camera_path: densities match their definitions") {
    auto pair = fixture_pair("cornell-material-roughness", 16);
    const Camera &cam = pair->camera();
    const double tan_half = std::tan(0.5 * cam.vfov_degrees() * Pi / 180);
    const double film_area = 4 * tan_half * tan_half * cam.width() / cam.height();
    int first = 0, inner = 0;
    for (int i = 0; i < 2000; ++i) {
        Sampler s(41, {uint64_t(i)});
        Vec2 px{double(i % 16), double((i / 16) % 16)};
        Path p = trace_camera_path(*pair, FrameId::Old, px, 8, s);
        if (p.size() < 2) continue;
        CHECK(p.pdf_fwd[0] == 1);
        CHECK(p.pixel.x >= px.x);
        CHECK(p.pixel.x < px.x + 1);
        // Camera: uniform on the film plane at unit distance, then to area.
        Vec3 d = p.v[1].p - cam.position();
        double dist = length(d);
        Vec3 w = d / dist;
        double cos_cam = dot(w, cam.forward());
        double pdf_dir = 1.0 / (film_area * cos_cam * cos_cam * cos_cam);
        double expected = pdf_dir * std::abs(dot(p.v[1].n, w)) / (dist * dist);
        CHECK(rel_err(p.pdf_fwd[1], expected) < 1e-12);
        ++first;
        for (int j = 2; j < p.size(); ++j) {
            const PathVertex &a = p.v[j - 1], &prev = p.v[j - 2], &b = p.v[j];
            Vec3 e = b.p - a.p;
            double l = length(e);
            Vec3 wo = e / l, wi = normalize(prev.p - a.p);
            double fwd = bsdf_pdf(pair->material(a.prim, FrameId::Old), a.n, wi, wo) * std::abs(dot(b.n, wo)) / (l * l);
            CHECK(rel_err(p.pdf_fwd[j], fwd) < 1e-12);
            ++inner;
        }
        for (int j = 1; j + 2 < p.size(); ++j) {
            const PathVertex &at = p.v[j + 1], &from = p.v[j + 2], &to = p.v[j];
            Vec3 e = to.p - at.p;
            double l = length(e);
            double rev = bsdf_pdf(pair->material(at.prim, FrameId::Old), at.n, normalize(from.p - at.p), e / l) *
                         std::abs(dot(to.n, e / l)) / (l * l);
            CHECK(rel_err(p.pdf_rev[j], rev) < 1e-12);
        }
    }
    CHECK(first >= 1000);
    CHECK(inner >= 1000);
}

TEST_CASE("trace_camera_path: escaping and ghost-free paths") {
    SceneBuilder b;
    b.add(quad({-1, -1, 5}, {1, -1, 5}, {1, 1, 5}, {-1, 1, 5}));
    b.add_emitter(quad({-1, -1, 6}, {1, -1, 6}, {1, 1, 6}, {-1, 1, 6}), Rgb(1.0));
    b.scene.camera = Camera({0, 0, 0}, {0, 0, -1}, {0, 1, 0}, 30, 4, 4);
    auto away = b.build();
    Sampler s(1, {});
    CHECK(trace_camera_path(*away, FrameId::New, {1, 1}, 8, s).size() == 1);

    auto pair = fixture_pair("cornell-move", 16);
    Fixture f = make_fixture("cornell-move", 16);
    ScenePair still(std::move(f.base), {});
    for (int i = 0; i < 500; ++i) {
        Sampler si(43, {uint64_t(i)});
        Path p = trace_camera_path(still, FrameId::New, {double(i % 16), double(i / 16 % 16)}, 8, si);
        for (const auto &cs : p.crossings) CHECK(cs.empty());
    }
}

TEST_CASE("correlated: identity edits give an exactly zero residual") {
    PathTracerConfig cfg;
    cfg.spp = 8;
    cfg.max_vertices = 6;
    {
        Fixture f = make_fixture("cornell-move", 16);
        ScenePair still(std::move(f.base), {});
        RenderResult r = render_residual_correlated(still, cfg);
        for (const Rgb &p : r.mean.pixels) CHECK(p == Rgb{});
    }
    {
        // An edit that names an object but moves nothing and keeps its material.
        Fixture f = make_fixture("cornell-move", 16);
        std::vector<Edit> edits = {{f.edits[0].object, RigidTransform{Mat3{}, {0, 0, 0}}, std::nullopt}};
        ScenePair still(std::move(f.base), std::move(edits));
        RenderResult r = render_residual_correlated(still, cfg);
        for (const Rgb &p : r.mean.pixels) CHECK(p == Rgb{});
    }
}

TEST_CASE("correlated: material edit cancels samples that miss the edited object") {
    // Direct lighting only: a sample depends on the material only through its
    // first surface vertex, so every sample that lands elsewhere cancels.
    auto pair = fixture_pair("cornell-material-color", 16);
    const int box = pair->base().find_object("short-box");
    PathTracerConfig cfg;
    cfg.max_vertices = 3;
    int cancelled = 0, on_box = 0;
    for (int pixel = 0; pixel < 256; ++pixel)
        for (int smp = 0; smp < 16; ++smp) {
            const Vec2 raster{double(pixel % 16), double(pixel / 16)};
            Sampler s_new = pixel_sampler(7, pixel, smp), s_old = s_new, probe = s_new;
            Rgb a = trace_radiance(*pair, FrameId::New, raster, cfg, s_new);
            Rgb b = trace_radiance(*pair, FrameId::Old, raster, cfg, s_old);
            auto hit = pair->intersect({pair->camera().position(), pair->camera().direction(raster + probe.next2())},
                                       FrameId::New);
            if (hit && pair->triangle(hit->prim).object == box) {
                ++on_box;
                continue;
            }
            CHECK(a - b == Rgb{});
            ++cancelled;
        }
    CHECK(cancelled > 1000);
    CHECK(on_box > 100);
}

TEST_CASE("correlated: lower variance than independent differencing") {
    auto pair = fixture_pair("cornell-move", 32);
    PathTracerConfig cfg;
    cfg.spp = 64;
    cfg.batches = 16;
    cfg.max_vertices = 5;
    double corr = mean_value(render_residual_correlated(*pair, cfg).variance);
    double indep = mean_value(render_residual_independent(*pair, cfg).variance);
    CAPTURE(corr);
    CAPTURE(indep);
    CHECK(corr * 5 < indep);
}
