// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#include "resid/scene_io.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "resid/error.h"

namespace resid {

using Json = nlohmann::ordered_json;

namespace {

std::string read_text(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

[[noreturn]] void fail(const std::string &where, const std::string &what) {
    throw ValidationError(fmt::format("{}: {}", where, what));
}

const Json &require(const Json &obj, const char *key, const std::string &where) {
    if (!obj.is_object()) fail(where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(where, fmt::format("missing key '{}'", key));
    return *it;
}

double number(const Json &j, const std::string &where) {
    if (!j.is_number()) fail(where, "expected a number");
    return j.get<double>();
}

std::vector<double> numbers(const Json &j, size_t n, const std::string &where) {
    if (!j.is_array() || j.size() != n) fail(where, fmt::format("expected an array of {} numbers", n));
    std::vector<double> out;
    for (size_t i = 0; i < n; ++i) out.push_back(number(j[i], fmt::format("{}[{}]", where, i)));
    return out;
}

Vec3 vec3(const Json &j, const std::string &where) {
    auto v = numbers(j, 3, where);
    return {v[0], v[1], v[2]};
}

Rgb rgb(const Json &j, const std::string &where) {
    auto v = numbers(j, 3, where);
    return {v[0], v[1], v[2]};
}

Material parse_material(const Json &j, const std::string &name, const std::string &where) {
    Material m;
    m.name = name;
    std::string type = require(j, "type", where).is_string() ? j["type"].get<std::string>() : "";
    if (type == "lambertian") {
        m.type = MaterialType::Lambertian;
    } else if (type == "ggx") {
        m.type = MaterialType::Ggx;
        m.roughness = number(require(j, "roughness", where), where + ".roughness");
    } else {
        fail(where + ".type", "expected \"lambertian\" or \"ggx\"");
    }
    m.albedo = rgb(require(j, "albedo", where), where + ".albedo");
    return m;
}

std::string line_col(const std::string &text, size_t byte) {
    size_t line = 1, col = 1;
    for (size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return fmt::format("line {}, column {}", line, col);
}

} // namespace

std::vector<std::array<Vec3, 3>> load_obj(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open OBJ '{}'", path));
    std::vector<Vec3> verts;
    std::vector<std::array<Vec3, 3>> tris;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x >> v.y >> v.z)) fail(fmt::format("{}:{}", path, lineno), "malformed vertex");
            verts.push_back(v);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ls >> tok) {
                int i = 0;
                try {
                    i = std::stoi(tok.substr(0, tok.find('/')));
                } catch (const std::exception &) {
                    fail(fmt::format("{}:{}", path, lineno), "malformed face index");
                }
                i = i < 0 ? int(verts.size()) + i : i - 1;
                if (i < 0 || i >= int(verts.size()))
                    fail(fmt::format("{}:{}", path, lineno), "face index out of range");
                idx.push_back(i);
            }
            if (idx.size() < 3) fail(fmt::format("{}:{}", path, lineno), "face with fewer than 3 vertices");
            for (size_t k = 1; k + 1 < idx.size(); ++k)
                tris.push_back({verts[idx[0]], verts[idx[k]], verts[idx[k + 1]]});
        }
    }
    return tris;
}

SceneFile parse_scene_text(const std::string &text, const std::string &base_dir) {
    Json root;
    try {
        root = Json::parse(text);
    } catch (const Json::parse_error &e) {
        throw ValidationError(fmt::format("parse error at {}: {}", line_col(text, e.byte), e.what()));
    }
    SceneFile out;
    out.text = text;
    Scene &scene = out.base;

    const Json &mats = require(root, "materials", "scene");
    if (!mats.is_object()) fail("materials", "expected an object keyed by material name");
    for (auto it = mats.begin(); it != mats.end(); ++it)
        scene.materials.push_back(parse_material(it.value(), it.key(), "materials." + it.key()));

    const Json &geo = require(root, "geometry", "scene");
    if (!geo.is_array()) fail("geometry", "expected an array");
    for (size_t i = 0; i < geo.size(); ++i) {
        std::string where = fmt::format("geometry[{}]", i);
        const Json &g = geo[i];
        SceneObject obj;
        const Json &name = require(g, "name", where);
        if (!name.is_string()) fail(where + ".name", "expected a string");
        obj.name = name.get<std::string>();
        if (scene.find_object(obj.name) >= 0) fail(where + ".name", "duplicate object name");
        const Json &mname = require(g, "material", where);
        obj.material = mname.is_string() ? scene.find_material(mname.get<std::string>()) : -1;
        if (obj.material < 0) fail(where + ".material", "unknown material");
        if (g.contains("triangles")) {
            const Json &ts = g["triangles"];
            if (!ts.is_array()) fail(where + ".triangles", "expected an array");
            for (size_t t = 0; t < ts.size(); ++t) {
                std::string tw = fmt::format("{}.triangles[{}]", where, t);
                if (!ts[t].is_array() || ts[t].size() != 3) fail(tw, "expected 3 vertices");
                obj.triangles.push_back({vec3(ts[t][0], tw + "[0]"), vec3(ts[t][1], tw + "[1]"),
                                         vec3(ts[t][2], tw + "[2]")});
            }
        } else if (g.contains("obj")) {
            if (!g["obj"].is_string()) fail(where + ".obj", "expected a file path");
            std::filesystem::path p(g["obj"].get<std::string>());
            if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
            obj.triangles = load_obj(p.string());
        } else {
            fail(where, "needs 'triangles' or 'obj'");
        }
        if (obj.triangles.empty()) fail(where, "object has no triangles");
        scene.objects.push_back(std::move(obj));
    }

    if (root.contains("emitters")) {
        const Json &ems = root["emitters"];
        if (!ems.is_array()) fail("emitters", "expected an array");
        for (size_t i = 0; i < ems.size(); ++i) {
            std::string where = fmt::format("emitters[{}]", i);
            const Json &on = require(ems[i], "object", where);
            Emitter e;
            e.object = on.is_string() ? scene.find_object(on.get<std::string>()) : -1;
            if (e.object < 0) fail(where + ".object", "unknown object");
            e.radiance = rgb(require(ems[i], "radiance", where), where + ".radiance");
            scene.emitters.push_back(e);
        }
    }

    const Json &cam = require(root, "camera", "scene");
    auto res = numbers(require(cam, "resolution", "camera"), 2, "camera.resolution");
    Vec3 up = cam.contains("up") ? vec3(cam["up"], "camera.up") : Vec3{0, 1, 0};
    double fov = number(require(cam, "fov", "camera"), "camera.fov");
    if (!(fov > 0 && fov < 180)) fail("camera.fov", "expected degrees in (0, 180)");
    if (res[0] < 1 || res[1] < 1) fail("camera.resolution", "must be positive");
    scene.camera = Camera(vec3(require(cam, "position", "camera"), "camera.position"),
                          vec3(require(cam, "look_at", "camera"), "camera.look_at"), up, fov,
                          int(res[0]), int(res[1]));

    if (root.contains("edits")) {
        const Json &eds = root["edits"];
        if (!eds.is_array()) fail("edits", "expected an array");
        for (size_t i = 0; i < eds.size(); ++i) {
            std::string where = fmt::format("edits[{}]", i);
            const Json &e = eds[i];
            Edit edit;
            const Json &on = require(e, "object", where);
            edit.object = on.is_string() ? scene.find_object(on.get<std::string>()) : -1;
            if (edit.object < 0) fail(where + ".object", "unknown object");
            if (e.contains("transform")) {
                const Json &t = e["transform"];
                RigidTransform xf;
                if (t.contains("rotation")) {
                    auto r = numbers(t["rotation"], 9, where + ".transform.rotation");
                    for (int k = 0; k < 9; ++k) xf.rotation.m[k / 3][k % 3] = r[k];
                }
                if (t.contains("translation"))
                    xf.translation = vec3(t["translation"], where + ".transform.translation");
                edit.transform = xf;
            }
            if (e.contains("material")) {
                const Json &m = e["material"];
                if (m.is_string()) {
                    int id = scene.find_material(m.get<std::string>());
                    if (id < 0) fail(where + ".material", "unknown material");
                    edit.material = id;
                } else {
                    scene.materials.push_back(
                        parse_material(m, fmt::format("edit{}", i), where + ".material"));
                    edit.material = int(scene.materials.size()) - 1;
                }
            }
            if (!edit.transform && !edit.material) fail(where, "needs 'transform' and/or 'material'");
            out.edits.push_back(edit);
        }
    }
    return out;
}

SceneFile load_scene_file(const std::string &path) {
    std::string text = read_text(path);
    return parse_scene_text(text, std::filesystem::path(path).parent_path().string());
}

std::string serialize_scene(const Scene &base, const std::vector<Edit> &edits) {
    auto arr = [](const Vec3 &v) { return Json::array({v.x, v.y, v.z}); };
    auto col = [](const Rgb &c) { return Json::array({c.r, c.g, c.b}); };
    Json root;
    Json mats = Json::object();
    for (const Material &m : base.materials) {
        Json jm;
        jm["type"] = m.type == MaterialType::Lambertian ? "lambertian" : "ggx";
        jm["albedo"] = col(m.albedo);
        if (m.type == MaterialType::Ggx) jm["roughness"] = m.roughness;
        mats[m.name] = jm;
    }
    root["materials"] = mats;
    Json geo = Json::array();
    for (const SceneObject &o : base.objects) {
        Json jo;
        jo["name"] = o.name;
        jo["material"] = base.materials[o.material].name;
        Json ts = Json::array();
        for (const auto &t : o.triangles) ts.push_back(Json::array({arr(t[0]), arr(t[1]), arr(t[2])}));
        jo["triangles"] = ts;
        geo.push_back(jo);
    }
    root["geometry"] = geo;
    Json ems = Json::array();
    for (const Emitter &e : base.emitters)
        ems.push_back({{"object", base.objects[e.object].name}, {"radiance", col(e.radiance)}});
    root["emitters"] = ems;
    const Camera &c = base.camera;
    root["camera"] = {{"position", arr(c.position())},
                      {"look_at", arr(c.position() + c.forward())},
                      {"up", arr(c.up_hint())},
                      {"fov", c.vfov_degrees()},
                      {"resolution", Json::array({c.width(), c.height()})}};
    Json eds = Json::array();
    for (const Edit &e : edits) {
        Json je;
        je["object"] = base.objects[e.object].name;
        if (e.transform) {
            Json r = Json::array();
            for (int k = 0; k < 9; ++k) r.push_back(e.transform->rotation.m[k / 3][k % 3]);
            je["transform"] = {{"rotation", r}, {"translation", arr(e.transform->translation)}};
        }
        if (e.material) je["material"] = base.materials[*e.material].name;
        eds.push_back(je);
    }
    root["edits"] = eds;
    return root.dump(1);
}

void save_scene_file(const std::string &path, const Scene &base, const std::vector<Edit> &edits) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path));
    out << serialize_scene(base, edits) << "\n";
    if (!out) throw IoError(fmt::format("write failed for '{}'", path));
}

} // namespace resid
