// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <map>

#include "matid/error.hpp"
#include "matid/scene.hpp"
#include "trace_oracle.hpp"

using namespace matid;

namespace {

Facet rect_z(std::string id, double z, double x0, double x1, double y0, double y1, bool up = true) {
    Facet f{std::move(id), {{x0, y0, z}, {x1, y0, z}, {x1, y1, z}, {x0, y1, z}}, "unknown", 0.1};
    if (!up) std::reverse(f.vertices.begin(), f.vertices.end());
    return f;
}

Facet rect_x(std::string id, double x, double y0, double y1, double z0, double z1) {
    return {std::move(id), {{x, y0, z0}, {x, y1, z0}, {x, y1, z1}, {x, y0, z1}}, "unknown", 0.1};
}

bool near(const Vec3& a, const Vec3& b, double tol = 1e-9) {
    return distance(a, b) < tol;
}

}  // namespace

TEST_CASE("single floor bounce lands at the midpoint") {
    Scene scene({rect_z("floor", 0.0, -1, 3, -1, 1)});
    auto paths = trace(scene, {0, 0, 1}, {2, 0, 1}, 1);
    REQUIRE(paths.size() == 1);
    CHECK(near(paths[0].hops[0].rp, {1, 0, 0}));
    CHECK(paths[0].hops[0].theta_i == doctest::Approx(kPi / 4));
    CHECK(paths[0].total_length == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(paths[0].segment_lengths.size() == 2);
    CHECK(paths[0].path_key() == "floor");
}

TEST_CASE("floor then ceiling two-bounce path") {
    Scene scene({rect_z("floor", 0.0, -1, 5, -1, 1), rect_z("ceiling", 2.0, -1, 5, -1, 1, false)});
    auto paths = trace(scene, {0, 0, 1}, {4, 0, 1}, 2);
    const Trajectory* fc = nullptr;
    for (const auto& p : paths) {
        if (p.path_key() == "floor>ceiling") fc = &p;
    }
    REQUIRE(fc != nullptr);
    CHECK(near(fc->hops[0].rp, {1, 0, 0}));
    CHECK(near(fc->hops[1].rp, {3, 0, 2}));
    CHECK(fc->hops[0].theta_i == doctest::Approx(kPi / 4));
    CHECK(fc->hops[1].theta_i == doctest::Approx(kPi / 4));
    CHECK(fc->total_length == doctest::Approx(4.0 * std::sqrt(2.0)).epsilon(1e-12));
    // Single bounces come first, then doubles.
    CHECK(paths.front().bounces() == 1);
    CHECK(paths.back().bounces() == 2);
}

TEST_CASE("an interposed facet occludes the only reflection") {
    Scene open({rect_z("floor", 0.0, -1, 3, -1, 1)});
    CHECK(trace(open, {0, 0, 1}, {2, 0, 1}, 1).size() == 1);
    Scene blocked({rect_z("floor", 0.0, -1, 3, -1, 1), rect_x("screen", 1.5, -1, 1, 0.1, 0.9)});
    for (const auto& p : trace(blocked, {0, 0, 1}, {2, 0, 1}, 1)) CHECK(p.path_key() != "floor");
}

TEST_CASE("a path that misses the facet is not emitted") {
    Scene scene({rect_z("floor", 0.0, 1.5, 3, -1, 1)});
    CHECK(trace(scene, {0, 0, 1}, {2, 0, 1}, 1).empty());
}

TEST_CASE("incident angle") {
    CHECK(incident_angle(normalized(Vec3{1, 0, -1}), {0, 0, 1}) == doctest::Approx(kPi / 4));
    CHECK(incident_angle({0, 0, -1}, {0, 0, 1}) == 0.0);
    CHECK(incident_angle({0, 0, 1}, {0, 0, 1}) == 0.0);
    CHECK(incident_angle({1, 0, 0}, {0, 0, 1}) < kHalfPi);
    CHECK_THROWS_AS(incident_angle({1, 1, 0}, {0, 0, 1}), InvalidArgument);
}

TEST_CASE("trace argument validation") {
    Scene scene({rect_z("floor", 0.0, -1, 3, -1, 1)});
    CHECK_THROWS_AS(trace(scene, {0, 0, 1}, {2, 0, 1}, 0), InvalidArgument);
    CHECK_THROWS_AS(trace(scene, {0, 0, 1}, {2, 0, 1}, 5), InvalidArgument);
    CHECK_THROWS_AS(trace(scene, {0, 0, 1}, {0, 0, 1}, 1), InvalidArgument);
    Scene boxed({rect_z("floor", 0.0, -1, 3, -1, 1)}, Aabb{{-1, -1, 0}, {3, 1, 2}});
    CHECK_THROWS_AS(trace(boxed, {0, 0, 5}, {2, 0, 1}, 1), InvalidArgument);
}

TEST_CASE("facet validation") {
    CHECK_THROWS_AS(Scene({Facet{"a", {{0, 0, 0}, {1, 0, 0}}, "wood", 0.0}}), ValidationError);
    CHECK_THROWS_AS(Scene({Facet{"line", {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, "wood", 0.0}}), ValidationError);
    CHECK_THROWS_AS(Scene({Facet{"bent", {{0, 0, 0}, {1, 0, 0}, {1, 1, 0.1}, {0, 1, 0}}, "wood", 0.0}}),
                    ValidationError);
    CHECK_THROWS_AS(Scene({Facet{"dart", {{0, 0, 0}, {2, 0, 0}, {1, 0.3, 0}, {1, 2, 0}}, "wood", 0.0}}),
                    ValidationError);
    CHECK_THROWS_AS(Scene({Facet{"bow", {{0, 0, 0}, {1, 1, 0}, {1, 0, 0}, {0, 1, 0}}, "wood", 0.0}}),
                    ValidationError);
    Facet neg = rect_z("neg", 0, 0, 1, 0, 1);
    neg.thickness = -1.0;
    CHECK_THROWS_AS(Scene({neg}), ValidationError);
    CHECK_THROWS_AS(Scene({rect_z("a", 0, 0, 1, 0, 1), rect_z("a", 1, 0, 1, 0, 1)}), ValidationError);
    CHECK_THROWS_AS(Scene({rect_z("a", 0, 0, 1, 0, 1)}, Aabb{{0, 0, 0}, {0.5, 1, 1}}), ValidationError);
    try {
        Scene({Facet{"bad-one", {{0, 0, 0}, {1, 0, 0}}, "wood", 0.0}});
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("bad-one") != std::string::npos);
    }
}

TEST_CASE("scene JSON round-trips") {
    Scene scene({rect_z("floor", 0.0, -1, 3, -1, 1), rect_x("wall", 3.0, -1, 1, 0, 2)}, Aabb{{-1, -1, 0}, {3, 1, 2}},
                {{0, 0, 1}}, {{2, 0, 1}});
    const std::string text = scene_to_json(scene);
    auto back = parse_scene_json(text);
    CHECK(back.size() == 2);
    CHECK(back.facet("wall").vertices == scene.facet("wall").vertices);
    CHECK(back.facet("floor").thickness == 0.1);
    CHECK(back.has_explicit_bounds());
    CHECK(back.transmitters() == scene.transmitters());
    CHECK(scene_to_json(back) == text);

    CHECK_THROWS_AS(parse_scene_json("{"), ValidationError);
    CHECK_THROWS_AS(parse_scene_json(R"({"units":"mm","facets":[]})"), ValidationError);
    CHECK_THROWS_AS(parse_scene_json(R"({"facets":[{"id":"x","vertices":[[0,0],[1,0,0],[0,1,0]]}]})"),
                    ValidationError);
    auto defaults = parse_scene_json(R"({"facets":[{"id":"x","vertices":[[0,0,0],[1,0,0],[0,1,0]]}]})");
    CHECK(defaults.facet("x").material == kUnknownMaterial);
}

TEST_CASE("settling check against facet thickness") {
    Facet thin = rect_z("thin", 0, 0, 1, 0, 1);
    thin.material = "glass";
    thin.thickness = 0.001;
    Facet thick = rect_z("thick", 1, 0, 1, 0, 1);
    thick.material = "glass";
    thick.thickness = 0.05;
    Facet unknown = rect_z("anon", 2, 0, 1, 0, 1);
    Scene scene({thin, thick, unknown});
    const std::map<std::string, double, std::less<>> req{{"glass", 0.022}};
    auto checks = check_settling(scene, req);
    REQUIRE(checks.size() == 3);
    CHECK(checks[0].status == SettlingStatus::TooThin);
    CHECK(checks[1].status == SettlingStatus::Ok);
    CHECK(checks[2].status == SettlingStatus::Indeterminate);
    CHECK(to_string(checks[0].status) == "too_thin");
}

TEST_CASE("image method agrees with brute-force search on small scenes") {
    oracle::OracleStats total;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        auto rs = oracle::random_scene(seed, 3);
        auto st = oracle::compare_with_trace(rs);
        total.valid_checked += st.valid_checked;
        total.invalid_checked += st.invalid_checked;
        total.mismatches += st.mismatches;
        total.worst_rp_error = std::max(total.worst_rp_error, st.worst_rp_error);
    }
    CHECK(total.mismatches == 0);
    CHECK(total.valid_checked >= 30);
    CHECK(total.invalid_checked >= 30);
    CHECK(total.worst_rp_error < 1e-3);
}

TEST_CASE("reciprocity and specular replay on random scenes") {
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        auto rs = oracle::random_scene(seed, 5);
        auto scene = rs.scene();
        CHECK(oracle::reciprocal(scene, rs.tx, rs.rx, 3));
        for (const auto& t : trace(scene, rs.tx, rs.rx, 3)) {
            CHECK(oracle::specular_replay_error(scene, t) < 1e-6);
            double sum = 0.0;
            for (double s : t.segment_lengths) sum += s;
            CHECK(sum == doctest::Approx(t.total_length).epsilon(1e-12));
        }
    }
}

TEST_CASE("tracing is deterministic") {
    auto rs = oracle::random_scene(42, 5);
    auto scene = rs.scene();
    auto a = trace(scene, rs.tx, rs.rx, 3);
    auto b = trace(scene, rs.tx, rs.rx, 3);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].path_key() == b[i].path_key());
        CHECK(a[i].total_length == b[i].total_length);
    }
}
