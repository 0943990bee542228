// SPDX-License-Identifier: Apache-2.0
#include "matid/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "matid/error.hpp"

namespace matid {

namespace {

constexpr double kCoplanarTol = 1e-9;  // m
constexpr double kMinArea = 1e-12;     // m^2

[[noreturn]] void reject(const std::string& facet_id, const std::string& what) {
    throw ValidationError("facet '" + facet_id + "': " + what);
}

bool finite(const Vec3& v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

// Newell's method; length is twice the polygon area.
Vec3 newell_normal(const std::vector<Vec3>& v) {
    Vec3 n;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec3& a = v[i];
        const Vec3& b = v[(i + 1) % v.size()];
        n.x += (a.y - b.y) * (a.z + b.z);
        n.y += (a.z - b.z) * (a.x + b.x);
        n.z += (a.x - b.x) * (a.y + b.y);
    }
    return n;
}

Plane validate_facet(const Facet& f) {
    if (f.id.empty()) throw ValidationError("facet with empty id");
    if (f.vertices.size() < 3) reject(f.id, "needs at least 3 vertices");
    for (const auto& v : f.vertices) {
        if (!finite(v)) reject(f.id, "non-finite vertex");
    }
    if (!(f.thickness >= 0.0) || !std::isfinite(f.thickness)) reject(f.id, "thickness must be finite and >= 0");

    const Vec3 n2 = newell_normal(f.vertices);
    const double area = 0.5 * norm(n2);
    if (!(area > kMinArea)) reject(f.id, "degenerate polygon (area <= 1e-12 m^2)");
    const Vec3 n = n2 * (1.0 / norm(n2));

    Vec3 centroid;
    for (const auto& v : f.vertices) centroid += v;
    centroid *= 1.0 / static_cast<double>(f.vertices.size());
    const Plane plane{n, dot(n, centroid)};

    for (std::size_t i = 0; i < f.vertices.size(); ++i) {
        if (std::abs(plane.signed_distance(f.vertices[i])) > kCoplanarTol) {
            reject(f.id, "vertex " + std::to_string(i) + " is not coplanar");
        }
    }
    // Convex iff every turn has the normal's sign and the turns add up to one revolution.
    const std::size_t count = f.vertices.size();
    double winding = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const Vec3& a = f.vertices[i];
        const Vec3& b = f.vertices[(i + 1) % count];
        const Vec3& c = f.vertices[(i + 2) % count];
        const double turn = dot(cross(b - a, c - b), n);
        const double scale = norm(b - a) * norm(c - b);
        if (scale == 0.0) reject(f.id, "repeated vertex");
        if (turn < -1e-12 * scale) reject(f.id, "polygon is not convex");
        winding += std::atan2(turn, dot(b - a, c - b));
    }
    if (std::abs(winding - 2.0 * kPi) > 1e-6) reject(f.id, "polygon is self-intersecting");
    return plane;
}

Vec3 read_point(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) throw ValidationError(where + ": expected [x, y, z]");
    Vec3 p;
    try {
        p = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
    } catch (const nlohmann::json::exception&) {
        throw ValidationError(where + ": coordinates must be numbers");
    }
    return p;
}

nlohmann::ordered_json write_point(const Vec3& p) { return nlohmann::ordered_json::array({p.x, p.y, p.z}); }

}  // namespace

Scene::Scene(std::vector<Facet> facets, std::optional<Aabb> bounds, std::vector<Vec3> transmitters,
             std::vector<Vec3> receivers)
    : facets_(std::move(facets)), transmitters_(std::move(transmitters)), receivers_(std::move(receivers)) {
    std::set<std::string, std::less<>> ids;
    planes_.reserve(facets_.size());
    for (const auto& f : facets_) {
        planes_.push_back(validate_facet(f));
        if (!ids.insert(f.id).second) reject(f.id, "duplicate id");
    }

    Aabb box{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
              std::numeric_limits<double>::infinity()},
             {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
              -std::numeric_limits<double>::infinity()}};
    for (const auto& f : facets_) {
        for (const auto& v : f.vertices) {
            box.lo = {std::min(box.lo.x, v.x), std::min(box.lo.y, v.y), std::min(box.lo.z, v.z)};
            box.hi = {std::max(box.hi.x, v.x), std::max(box.hi.y, v.y), std::max(box.hi.z, v.z)};
        }
    }
    if (bounds) {
        if (!(bounds->lo.x <= bounds->hi.x && bounds->lo.y <= bounds->hi.y && bounds->lo.z <= bounds->hi.z)) {
            throw ValidationError("scene bounds: min exceeds max");
        }
        for (const auto& f : facets_) {
            for (const auto& v : f.vertices) {
                if (!bounds->contains(v, kCoplanarTol)) reject(f.id, "vertex outside scene bounds");
            }
        }
        bounds_ = *bounds;
        explicit_bounds_ = true;
    } else if (!facets_.empty()) {
        bounds_ = box;
    }
    for (const auto& p : transmitters_) {
        if (!finite(p)) throw ValidationError("transmitter position is not finite");
        if (explicit_bounds_ && !bounds_.contains(p)) throw ValidationError("transmitter outside scene bounds");
    }
    for (const auto& p : receivers_) {
        if (!finite(p)) throw ValidationError("receiver position is not finite");
        if (explicit_bounds_ && !bounds_.contains(p)) throw ValidationError("receiver outside scene bounds");
    }
}

std::size_t Scene::facet_index(std::string_view id) const {
    for (std::size_t i = 0; i < facets_.size(); ++i) {
        if (facets_[i].id == id) return i;
    }
    throw InvalidArgument("no facet with id '" + std::string(id) + "'");
}

bool Scene::inside_polygon(std::size_t facet, const Vec3& p) const {
    const auto& v = facets_[facet].vertices;
    const Vec3& n = planes_[facet].normal;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec3 edge = v[(i + 1) % v.size()] - v[i];
        const double side = dot(cross(edge, p - v[i]), n);
        if (side < -1e-9 * norm(edge)) return false;
    }
    return true;
}

Scene parse_scene_json(std::string_view text, const std::string& source) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(source + ": " + e.what());
    }
    if (!doc.is_object()) throw ValidationError(source + ": top level must be an object");
    if (doc.contains("units") && doc["units"] != "m") throw ValidationError(source + ": units must be \"m\"");
    if (!doc.contains("facets") || !doc["facets"].is_array()) {
        throw ValidationError(source + ": missing \"facets\" array");
    }

    std::vector<Facet> facets;
    std::size_t index = 0;
    for (const auto& jf : doc["facets"]) {
        const std::string where = source + ": facets[" + std::to_string(index++) + "]";
        if (!jf.is_object()) throw ValidationError(where + ": expected an object");
        Facet f;
        if (!jf.contains("id") || !jf["id"].is_string()) throw ValidationError(where + ": missing string \"id\"");
        f.id = jf["id"].get<std::string>();
        if (!jf.contains("vertices") || !jf["vertices"].is_array()) {
            throw ValidationError(where + " ('" + f.id + "'): missing \"vertices\"");
        }
        for (const auto& jv : jf["vertices"]) f.vertices.push_back(read_point(jv, where + " ('" + f.id + "')"));
        if (jf.contains("material")) {
            if (!jf["material"].is_string()) throw ValidationError(where + " ('" + f.id + "'): material must be a string");
            f.material = jf["material"].get<std::string>();
        }
        if (jf.contains("thickness_m")) {
            if (!jf["thickness_m"].is_number()) {
                throw ValidationError(where + " ('" + f.id + "'): thickness_m must be a number");
            }
            f.thickness = jf["thickness_m"].get<double>();
        }
        facets.push_back(std::move(f));
    }

    std::optional<Aabb> bounds;
    if (doc.contains("bounds")) {
        const auto& jb = doc["bounds"];
        if (!jb.is_object() || !jb.contains("min") || !jb.contains("max")) {
            throw ValidationError(source + ": bounds needs \"min\" and \"max\"");
        }
        bounds = Aabb{read_point(jb["min"], source + ": bounds.min"), read_point(jb["max"], source + ": bounds.max")};
    }
    auto read_points = [&](const char* key) {
        std::vector<Vec3> pts;
        if (!doc.contains(key)) return pts;
        if (!doc[key].is_array()) throw ValidationError(source + ": \"" + key + "\" must be an array");
        for (const auto& jp : doc[key]) pts.push_back(read_point(jp, source + ": " + key));
        return pts;
    };
    auto tx = read_points("transmitters");
    auto rx = read_points("receivers");
    return Scene(std::move(facets), bounds, std::move(tx), std::move(rx));
}

Scene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open scene '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scene_json(buf.str(), path);
}

std::string scene_to_json(const Scene& scene) {
    nlohmann::ordered_json doc;
    doc["units"] = "m";
    if (scene.has_explicit_bounds()) {
        doc["bounds"] = {{"min", write_point(scene.bounds().lo)}, {"max", write_point(scene.bounds().hi)}};
    }
    auto& facets = doc["facets"] = nlohmann::ordered_json::array();
    for (const auto& f : scene.facets()) {
        nlohmann::ordered_json jf;
        jf["id"] = f.id;
        jf["vertices"] = nlohmann::ordered_json::array();
        for (const auto& v : f.vertices) jf["vertices"].push_back(write_point(v));
        jf["material"] = f.material;
        jf["thickness_m"] = f.thickness;
        facets.push_back(std::move(jf));
    }
    if (!scene.transmitters().empty()) {
        doc["transmitters"] = nlohmann::ordered_json::array();
        for (const auto& p : scene.transmitters()) doc["transmitters"].push_back(write_point(p));
    }
    if (!scene.receivers().empty()) {
        doc["receivers"] = nlohmann::ordered_json::array();
        for (const auto& p : scene.receivers()) doc["receivers"].push_back(write_point(p));
    }
    return doc.dump(2) + "\n";
}

std::vector<SettlingCheck> check_settling(const Scene& scene,
                                          const std::map<std::string, double, std::less<>>& settling_by_material) {
    std::vector<SettlingCheck> out;
    out.reserve(scene.size());
    for (const auto& f : scene.facets()) {
        SettlingCheck c{f.id, SettlingStatus::Indeterminate, f.thickness, 0.0};
        if (f.material != kUnknownMaterial) {
            if (auto it = settling_by_material.find(f.material); it != settling_by_material.end()) {
                c.required_m = it->second;
                c.status = f.thickness >= it->second ? SettlingStatus::Ok : SettlingStatus::TooThin;
            }
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::string_view to_string(SettlingStatus s) {
    switch (s) {
        case SettlingStatus::Ok: return "ok";
        case SettlingStatus::TooThin: return "too_thin";
        case SettlingStatus::Indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

}  // namespace matid
