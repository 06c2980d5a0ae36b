// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include <fmt/format.h>
#include <json.hpp>

#include "doctest.h"
#include "resid/error.h"
#include "resid/harness.h"
#include "resid/metrics.h"
#include "resid/scene_io.h"
#include "test_util.h"

using namespace resid;
using namespace resid::testing;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
    fs::path d = fs::temp_directory_path() / "resid_harness_tests";
    fs::create_directories(d);
    return d;
}

std::string write_fixture(const std::string &name, int res) {
    Fixture f = make_fixture(name, res);
    std::string path = (work_dir() / (name + "-" + std::to_string(res) + ".json")).string();
    save_scene_file(path, f.base, f.edits);
    return path;
}

std::string read_bytes(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunConfig pt_config(const std::string &scene, int spp) {
    RunConfig c;
    c.mode = RunMode::Pt;
    c.scene = scene;
    c.spp = spp;
    c.max_vertices = 5;
    c.threads = 1;
    return c;
}

int cli(const std::string &args) {
    int status = std::system(fmt::format("{} {} >/dev/null 2>&1", RESID_CLI, args).c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Image constant(int w, int h, double v) {
    Image img(w, h);
    for (Rgb &p : img.pixels) p = Rgb(v);
    return img;
}

} // namespace

TEST_CASE("modes parse by name") {
    for (RunMode m : {RunMode::Pt, RunMode::Correlated, RunMode::Incremental, RunMode::IncrementalNoMapping,
                      RunMode::Reference, RunMode::Compare})
        CHECK(parse_mode(mode_name(m)) == m);
    CHECK_THROWS_AS(parse_mode("bdpt"), ValidationError);
}

TEST_CASE("run config validation") {
    RunConfig c = pt_config("scene.json", 4);
    CHECK_NOTHROW(c.validate());
    RunConfig both = c;
    both.time_seconds = 1.0;
    CHECK_THROWS_AS(both.validate(), ValidationError);
    RunConfig none = c;
    none.spp.reset();
    CHECK_THROWS_AS(none.validate(), ValidationError);
    RunConfig short_paths = c;
    short_paths.max_vertices = 2;
    CHECK_THROWS_AS(short_paths.validate(), ValidationError);
    RunConfig empty_mask = c;
    empty_mask.mask.bits = 0;
    CHECK_THROWS_AS(empty_mask.validate(), ValidationError);
    RunConfig no_scene = c;
    no_scene.scene.clear();
    CHECK_THROWS_AS(no_scene.validate(), ValidationError);
    RunConfig composite_mode = c;
    composite_mode.mode = RunMode::Incremental;
    CHECK_THROWS_AS(composite_mode.validate(), ValidationError);
    composite_mode.old_frame = "old.pfm";
    CHECK_NOTHROW(composite_mode.validate());
    composite_mode.spp = 1;
    CHECK_THROWS_AS(composite_mode.validate(), ValidationError);
    RunConfig compare;
    compare.mode = RunMode::Compare;
    CHECK_THROWS_AS(compare.validate(), ValidationError);
    CHECK_THROWS_AS(TechniqueMask::parse("1238"), ValidationError);
}

TEST_CASE("pt mode is deterministic for a fixed seed") {
    const std::string scene = write_fixture("cornell-move", 16);
    RunConfig c = pt_config(scene, 4);
    c.out = (work_dir() / "pt_a.pfm").string();
    write_outputs(c, run(c));
    RunConfig d = c;
    d.out = (work_dir() / "pt_b.pfm").string();
    write_outputs(d, run(d));
    std::string a = read_bytes(c.out), b = read_bytes(d.out);
    CHECK(a.size() > 16 * 16 * 12);
    CHECK(a == b);
}

TEST_CASE("incremental mode with an identity edit composites to the old frame") {
    Fixture f = make_fixture("cornell-move", 16);
    std::vector<Edit> identity = {{f.edits[0].object, RigidTransform{Mat3{}, {0, 0, 0}}, std::nullopt}};
    const std::string scene = (work_dir() / "identity.json").string();
    save_scene_file(scene, f.base, identity);

    RunConfig pt = pt_config(scene, 8);
    pt.frame = FrameId::Old;
    pt.out = (work_dir() / "identity_old.pfm").string();
    write_outputs(pt, run(pt));

    for (RunMode mode : {RunMode::Incremental, RunMode::IncrementalNoMapping, RunMode::Correlated}) {
        RunConfig c;
        c.mode = mode;
        c.scene = scene;
        c.spp = 4;
        c.max_vertices = 5;
        c.old_frame = pt.out;
        RunOutput out = run(c);
        REQUIRE(out.residual);
        REQUIRE(out.image);
        for (const Rgb &p : out.residual->pixels) CHECK(p == Rgb{});
        Image old = read_pfm(pt.out);
        for (size_t i = 0; i < old.pixels.size(); ++i) CHECK(out.image->pixels[i] == old.pixels[i]);
    }
}

TEST_CASE("incremental mode reports sample accounting and metrics") {
    const std::string scene = write_fixture("cornell-move", 16);
    RunConfig pt = pt_config(scene, 4);
    pt.frame = FrameId::Old;
    pt.out = (work_dir() / "move_old.pfm").string();
    write_outputs(pt, run(pt));

    RunConfig c;
    c.mode = RunMode::Incremental;
    c.scene = scene;
    c.spp = 8;
    c.max_vertices = 5;
    c.old_frame = pt.out;
    c.reference = pt.out;
    c.report = (work_dir() / "report.json").string();
    RunOutput out = run(c);
    write_outputs(c, out);
    REQUIRE(out.report.stats);
    const ResidualStats &s = *out.report.stats;
    CHECK(s.paths_per_pixel() < 7.0 * 8);
    CHECK(s.paths_per_pixel() > 0);
    CHECK(s.candidate_count_errors == 0);
    CHECK(s.max_weight_error < 1e-6);
    CHECK(s.max_queries_per_element <= 4);
    REQUIRE(out.report.mse);
    CHECK(*out.report.mse > 0);
    CHECK(*out.report.ssim <= 1);
    CHECK(*out.report.ssim >= -1);

    nlohmann::json j = nlohmann::json::parse(read_bytes(c.report));
    CHECK(j["mode"] == "incremental");
    CHECK(j["spp"] == 8);
    CHECK(j["mse"].get<double>() >= 0);
    CHECK(j["stats"]["techniques"].size() == 7);
    CHECK(j["paths_per_sample"].get<double>() < 7);
    CHECK(j["ssim_tonemap"]["curve"] == "srgb");
}

TEST_CASE("time-budget runs complete at least one pass") {
    const std::string scene = write_fixture("cornell-move", 8);
    RunConfig c = pt_config(scene, 1);
    c.spp.reset();
    c.time_seconds = 0.05;
    RunOutput out = run(c);
    CHECK(out.report.passes >= 1);
    CHECK(out.report.spp == out.report.passes);
}

TEST_CASE("mse and ssim on trivial pairs") {
    Image a(16, 16);
    Sampler s(8, {});
    for (Rgb &p : a.pixels) p = {s.next(), s.next(), s.next()};
    CHECK(mse(a, a) == 0);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    Image b = a;
    for (Rgb &p : b.pixels) p += Rgb(0.1);
    CHECK(mse(a, b) == doctest::Approx(0.01).epsilon(1e-12));
    double v = ssim(a, b);
    CHECK(v < 1);
    CHECK(v > -1);
    CHECK_THROWS_AS(mse(a, Image(15, 16)), ValidationError);
    CHECK_THROWS_AS(ssim(a, Image(16, 15)), ValidationError);
    CHECK_THROWS_AS(ssim(Image(8, 8), Image(8, 8)), ValidationError);

    std::vector<char> mask(a.pixels.size(), 0);
    mask[3] = 1;
    Image c = a;
    c.pixels[3] += Rgb(0.5);
    c.pixels[4] += Rgb(7.0);
    CHECK(mse_masked(a, c, mask) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("compare mode reads two images") {
    Image a = constant(12, 12, 0.3), b = constant(12, 12, 0.5);
    RunConfig c;
    c.mode = RunMode::Compare;
    c.image = (work_dir() / "cmp_a.pfm").string();
    c.reference = (work_dir() / "cmp_b.pfm").string();
    write_pfm(a, c.image);
    write_pfm(b, c.reference);
    RunOutput out = run(c);
    REQUIRE(out.report.mse);
    CHECK(*out.report.mse == doctest::Approx(0.04).epsilon(1e-6));
}

TEST_CASE("convergence sweep") {
    Image ref = constant(8, 8, 1.0);
    CHECK_THROWS_AS(convergence_sweep({16, 64}, [&](int) { return ref; }, ref), ValidationError);

    SweepResult zero = convergence_sweep({16, 64, 256}, [&](int) { return ref; }, ref);
    REQUIRE(zero.points.size() == 3);
    for (const SweepPoint &p : zero.points) CHECK(p.mse == 0);
    CHECK(!zero.slope);

    // Gaussian noise with variance 1/spp: the 1/N law with slope -1.
    ref = constant(64, 64, 1.0);
    auto noisy = [&](int spp) {
        Image img(64, 64);
        Sampler s(9, {uint64_t(spp)});
        for (Rgb &p : img.pixels) {
            Vec2 u = s.next2();
            double g = std::sqrt(-2 * std::log(1 - u.x)) * std::cos(2 * Pi * u.y);
            p = Rgb(1.0 + g / std::sqrt(double(spp)));
        }
        return img;
    };
    SweepResult r = convergence_sweep({16, 64, 256, 1024}, noisy, ref);
    REQUIRE(r.slope);
    CHECK(std::abs(*r.slope + 1) < 0.15);

    // A constant offset plateaus.
    auto biased = [&](int spp) {
        Image img = noisy(spp);
        for (Rgb &p : img.pixels) p += Rgb(0.2);
        return img;
    };
    SweepResult b = convergence_sweep({16, 64, 256, 1024}, biased, ref);
    REQUIRE(b.slope);
    CHECK(*b.slope > -0.5);

    CHECK(loglog_slope({1, 10, 100}, {1, 0.1, 0.01}) == doctest::Approx(-1).epsilon(1e-12));
    CHECK_THROWS_AS(loglog_slope({1, 2}, {1, 2}), ValidationError);
}

TEST_CASE("content hash and reference cache") {
    CHECK(content_hash("") == 0xcbf29ce484222325ull);
    CHECK(content_hash("a") == 0xaf63dc4c8601ec8cull);
    const std::string dir = (work_dir() / "cache").string();
    fs::remove_all(dir);
    int calls = 0;
    auto render = [&] {
        ++calls;
        RenderResult r;
        r.mean = constant(4, 4, 0.25);
        r.variance = constant(4, 4, 0.125);
        return r;
    };
    RenderResult a = cached_render(dir, "key-1", render);
    RenderResult b = cached_render(dir, "key-1", render);
    CHECK(calls == 1);
    CHECK(b.mean.at(3, 3).g == 0.25);
    CHECK(b.variance.at(0, 0).r == 0.125);
    cached_render(dir, "key-2", render);
    CHECK(calls == 2);
    cached_render("", "key-1", render);
    CHECK(calls == 3);
}

TEST_CASE("reference mode caches by scene content") {
    const std::string scene = write_fixture("cornell-multi-1", 8);
    RunConfig c = pt_config(scene, 4);
    c.mode = RunMode::Reference;
    c.cache_dir = (work_dir() / "refcache").string();
    fs::remove_all(c.cache_dir);
    RunOutput a = run(c);
    int entries = 0;
    for (auto &e : fs::directory_iterator(c.cache_dir)) entries += e.path().extension() == ".pfm";
    CHECK(entries == 2);
    RunOutput b = run(c);
    REQUIRE(a.image);
    REQUIRE(a.variance);
    for (size_t i = 0; i < a.image->pixels.size(); ++i)
        for (int ch = 0; ch < 3; ++ch) CHECK(float(a.image->pixels[i][ch]) == b.image->pixels[i][ch]);
    c.seed = 2;
    run(c);
    entries = 0;
    for (auto &e : fs::directory_iterator(c.cache_dir)) entries += e.path().extension() == ".pfm";
    CHECK(entries == 4);
}

TEST_CASE("fixtures") {
    const std::string dir = (work_dir() / "fixtures").string();
    std::vector<std::string> files = build_fixtures(dir, 16);
    CHECK(files.size() == 13);
    for (const std::string &f : files) {
        SceneFile sf = load_scene_file(f);
        CHECK_NOTHROW(ScenePair(std::move(sf.base), std::move(sf.edits)));
    }

    auto move = fixture_pair("cornell-move");
    CHECK(move->has_ghosts());
    for (FrameId fr : {FrameId::Old, FrameId::New})
        CHECK(move->surface_area(SurfaceSet::Ghost, fr) ==
              doctest::Approx(move->surface_area(SurfaceSet::Dynamic, fr)).epsilon(1e-12));

    for (const char *v : {"color", "roughness", "metal"}) {
        auto m = fixture_pair(std::string("cornell-material-") + v);
        CHECK(!m->has_ghosts());
        CHECK(m->has_dynamic());
        CHECK(m->surface_area(SurfaceSet::Ghost, FrameId::New) == 0);
    }

    Fixture d = make_fixture("cornell-displace-220", 16);
    REQUIRE(d.edits.size() == 1);
    CHECK(length(d.edits[0].transform->translation) == doctest::Approx(220).epsilon(1e-12));
    for (int k : {1, 2, 4, 8}) CHECK(make_fixture(fmt::format("cornell-multi-{}", k), 16).edits.size() == size_t(k));
    CHECK_THROWS_AS(make_fixture("cornell-nothing", 16), ValidationError);

    // The checked-in copies match the generator at the default resolution.
    for (const Fixture &f : make_fixtures(128)) {
        CAPTURE(f.name);
        SceneFile sf = load_scene_file((fs::path(RESID_SOURCE_DIR) / "fixtures" / (f.name + ".json")).string());
        CHECK(serialize_scene(sf.base, sf.edits) == serialize_scene(f.base, f.edits));
    }
}

TEST_CASE("command line exit codes") {
    const std::string scene = write_fixture("cornell-move", 8);
    const std::string out = (work_dir() / "cli.pfm").string();
    CHECK(cli(fmt::format("--scene {} --mode pt --spp 2 --out {}", scene, out)) == 0);
    CHECK(fs::exists(out));
    CHECK(cli(fmt::format("--scene {} --mode pt --spp 2 --time 1", scene)) == 2);
    CHECK(cli(fmt::format("--scene {} --mode warp --spp 2", scene)) == 2);
    CHECK(cli(fmt::format("--scene {} --mode incremental --spp 2", scene)) == 2); // no old frame
    CHECK(cli(fmt::format("--scene {} --mode pt --spp 2 --techniques 9", scene)) == 2);
    CHECK(cli("--mode pt --spp 2 --scene /nonexistent/scene.json") == 3);
    CHECK(cli(fmt::format("--scene {} --mode incremental --spp 2 --old-frame /nonexistent/old.pfm", scene)) == 3);
    CHECK(cli(fmt::format("--scene {} --mode pt --spp 2 --out /nonexistent/dir/x.pfm", scene)) == 3);
    CHECK(cli("--bogus-flag") == 2);
}
