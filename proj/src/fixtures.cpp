// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#include "resid/fixtures.h"

#include <cmath>
#include <filesystem>

#include <fmt/format.h>

#include "resid/error.h"
#include "resid/scene_io.h"

namespace resid {

namespace {

using Tri = std::array<Vec3, 3>;

constexpr double Pi = 3.14159265358979323846;

// Quad a-b-c-d, wound so that the geometric normal points along `facing`.
void add_quad(std::vector<Tri> &out, Vec3 a, Vec3 b, Vec3 c, Vec3 d, Vec3 facing) {
    if (dot(cross(b - a, c - a), facing) < 0) std::swap(b, d);
    out.push_back({a, b, c});
    out.push_back({a, c, d});
}

// Box standing on the floor, open at the bottom, outward normals.
std::vector<Tri> make_box(Vec3 base_center, Vec3 size, double yaw_degrees) {
    Mat3 r = Mat3::rotation_y(yaw_degrees * Pi / 180.0);
    const double hx = 0.5 * size.x, hz = 0.5 * size.z, h = size.y;
    auto P = [&](double x, double y, double z) { return r * Vec3{x, y, z} + base_center; };
    auto N = [&](double x, double y, double z) { return r * Vec3{x, y, z}; };
    std::vector<Tri> t;
    add_quad(t, P(-hx, h, -hz), P(hx, h, -hz), P(hx, h, hz), P(-hx, h, hz), N(0, 1, 0));
    add_quad(t, P(-hx, 0, -hz), P(hx, 0, -hz), P(hx, h, -hz), P(-hx, h, -hz), N(0, 0, -1));
    add_quad(t, P(-hx, 0, hz), P(hx, 0, hz), P(hx, h, hz), P(-hx, h, hz), N(0, 0, 1));
    add_quad(t, P(-hx, 0, -hz), P(-hx, 0, hz), P(-hx, h, hz), P(-hx, h, -hz), N(-1, 0, 0));
    add_quad(t, P(hx, 0, -hz), P(hx, 0, hz), P(hx, h, hz), P(hx, h, -hz), N(1, 0, 0));
    return t;
}

int add_material(Scene &s, std::string name, MaterialType type, Rgb albedo, double roughness = 1.0) {
    Material m;
    m.type = type;
    m.albedo = albedo;
    m.roughness = roughness;
    m.name = std::move(name);
    s.materials.push_back(m);
    return int(s.materials.size()) - 1;
}

int add_object(Scene &s, std::string name, std::vector<Tri> tris, int material) {
    s.objects.push_back({std::move(name), std::move(tris), material});
    return int(s.objects.size()) - 1;
}

// Room of 556 x 548.8 x 559.2 units, open toward the camera at z = 0. The
// camera looks down +z, so image right is -x.
Scene cornell_room(int resolution) {
    Scene s;
    const int white = add_material(s, "white", MaterialType::Lambertian, {0.725, 0.71, 0.68});
    const int red = add_material(s, "red", MaterialType::Lambertian, {0.63, 0.065, 0.05});
    const int green = add_material(s, "green", MaterialType::Lambertian, {0.14, 0.45, 0.091});
    const int lamp = add_material(s, "lamp", MaterialType::Lambertian, {0.78, 0.78, 0.78});
    const double X = 556, Y = 548.8, Z = 559.2;
    std::vector<Tri> t;
    add_quad(t, {0, 0, 0}, {X, 0, 0}, {X, 0, Z}, {0, 0, Z}, {0, 1, 0});
    add_object(s, "floor", t, white);
    t.clear();
    add_quad(t, {0, Y, 0}, {X, Y, 0}, {X, Y, Z}, {0, Y, Z}, {0, -1, 0});
    add_object(s, "ceiling", t, white);
    t.clear();
    add_quad(t, {0, 0, Z}, {X, 0, Z}, {X, Y, Z}, {0, Y, Z}, {0, 0, -1});
    add_object(s, "back", t, white);
    t.clear();
    add_quad(t, {X, 0, 0}, {X, 0, Z}, {X, Y, Z}, {X, Y, 0}, {-1, 0, 0});
    add_object(s, "left", t, red);
    t.clear();
    add_quad(t, {0, 0, 0}, {0, 0, Z}, {0, Y, Z}, {0, Y, 0}, {1, 0, 0});
    add_object(s, "right", t, green);
    t.clear();
    const double ly = Y - 0.5;
    add_quad(t, {213, ly, 227}, {343, ly, 227}, {343, ly, 332}, {213, ly, 332}, {0, -1, 0});
    int light = add_object(s, "light", t, lamp);
    s.emitters.push_back({light, {17, 12, 4}});
    s.camera = Camera({278, 273, -800}, {278, 273, 0}, {0, 1, 0}, 39.3, resolution, resolution);
    return s;
}

Edit translate(int object, Vec3 d) { return {object, RigidTransform{Mat3{}, d}, std::nullopt}; }

Fixture cornell_move(int res) {
    Fixture f{"cornell-move", cornell_room(res), {}};
    int white = f.base.find_material("white");
    int small = add_object(f.base, "short-box", make_box({185, 0, 169}, {165, 165, 165}, -17), white);
    add_object(f.base, "tall-box", make_box({368, 0, 351}, {165, 330, 165}, 17), white);
    f.edits.push_back(translate(small, {-40, 0, 0}));
    return f;
}

Fixture cornell_multi(int k, int res) {
    Fixture f{fmt::format("cornell-multi-{}", k), cornell_room(res), {}};
    int white = f.base.find_material("white");
    add_object(f.base, "tall-box", make_box({368, 0, 351}, {165, 330, 165}, 17), white);
    // Floor spots clear of the tall box and of each other after the shift.
    static const Vec3 spots[8] = {{190, 0, 150}, {410, 0, 80},  {80, 0, 250},  {300, 0, 120},
                                  {90, 0, 60},   {470, 0, 170}, {210, 0, 300}, {100, 0, 420}};
    for (int i = 0; i < k; ++i) {
        int obj = add_object(f.base, fmt::format("cube-{}", i), make_box(spots[i], {60, 60, 60}, 10.0 * i), white);
        f.edits.push_back(translate(obj, {-30, 0, 0}));
    }
    return f;
}

Fixture cornell_displace(int d, int res) {
    Fixture f{fmt::format("cornell-displace-{}", d), cornell_room(res), {}};
    int white = f.base.find_material("white");
    // Unrotated box in front of the tall box, free to slide 220 units along -x.
    int small = add_object(f.base, "short-box", make_box({440, 0, 140}, {140, 140, 140}, 0), white);
    add_object(f.base, "tall-box", make_box({368, 0, 380}, {165, 330, 165}, 17), white);
    f.edits.push_back(translate(small, {-double(d), 0, 0}));
    return f;
}

Fixture cornell_material(const std::string &variant, int res) {
    Fixture f{"cornell-material-" + variant, cornell_room(res), {}};
    int white = f.base.find_material("white");
    int box_mat = white, target = -1;
    if (variant == "color") {
        target = add_material(f.base, "blue", MaterialType::Lambertian, {0.1, 0.2, 0.7});
    } else if (variant == "roughness") {
        box_mat = add_material(f.base, "glossy", MaterialType::Ggx, {0.8, 0.8, 0.8}, 0.1);
        target = add_material(f.base, "glossy-rough", MaterialType::Ggx, {0.8, 0.8, 0.8}, 0.5);
    } else if (variant == "metal") {
        target = add_material(f.base, "copper", MaterialType::Ggx, {0.95, 0.64, 0.54}, 0.2);
    } else {
        throw ValidationError(fmt::format("unknown material fixture '{}'", variant));
    }
    int small = add_object(f.base, "short-box", make_box({185, 0, 169}, {165, 165, 165}, -17), box_mat);
    add_object(f.base, "tall-box", make_box({368, 0, 351}, {165, 330, 165}, 17), white);
    f.edits.push_back({small, std::nullopt, target});
    return f;
}

// A partition near the image-left wall hides the cube from the camera in the
// old state; the cube then slides into view.
Fixture occluder_reveal(int res) {
    Fixture f{"occluder-reveal", cornell_room(res), {}};
    int white = f.base.find_material("white");
    std::vector<Tri> wall;
    add_quad(wall, {380, 0, 150}, {556, 0, 150}, {556, 250, 150}, {380, 250, 150}, {0, 0, -1});
    add_quad(wall, {380, 0, 151}, {556, 0, 151}, {556, 250, 151}, {380, 250, 151}, {0, 0, 1});
    add_quad(wall, {380, 0, 150}, {380, 0, 151}, {380, 250, 151}, {380, 250, 150}, {-1, 0, 0});
    add_quad(wall, {380, 250, 150}, {556, 250, 150}, {556, 250, 151}, {380, 250, 151}, {0, 1, 0});
    add_object(f.base, "partition", wall, white);
    int cube = add_object(f.base, "cube", make_box({470, 0, 300}, {100, 100, 100}, 0), white);
    f.edits.push_back(translate(cube, {-220, 0, 0}));
    return f;
}

} // namespace

std::vector<Fixture> make_fixtures(int resolution) {
    std::vector<Fixture> out;
    out.push_back(cornell_move(resolution));
    for (int k : {1, 2, 4, 8}) out.push_back(cornell_multi(k, resolution));
    for (int d : {40, 100, 160, 220}) out.push_back(cornell_displace(d, resolution));
    for (const char *v : {"color", "roughness", "metal"}) out.push_back(cornell_material(v, resolution));
    out.push_back(occluder_reveal(resolution));
    return out;
}

Fixture make_fixture(const std::string &name, int resolution) {
    for (Fixture &f : make_fixtures(resolution))
        if (f.name == name) return std::move(f);
    throw ValidationError(fmt::format("unknown fixture '{}'", name));
}

std::vector<std::string> build_fixtures(const std::string &dir, int resolution) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError(fmt::format("cannot create '{}': {}", dir, ec.message()));
    std::vector<std::string> paths;
    for (const Fixture &f : make_fixtures(resolution)) {
        std::string path = (std::filesystem::path(dir) / (f.name + ".json")).string();
        save_scene_file(path, f.base, f.edits);
        paths.push_back(path);
    }
    return paths;
}

} // namespace resid
