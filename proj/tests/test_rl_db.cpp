// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "matid/error.hpp"
#include "matid/rl_db.hpp"

using namespace matid;

namespace {

RLDatabase small_db(double kappa = 0.0) {
    const auto mats = builtin_materials();
    const std::vector<double> freqs{28.0, 100.0, 300.0};
    return build_rl_database(mats, freqs, default_angle_grid(), kappa, "test");
}

std::string dump(const RLDatabase& db) {
    std::ostringstream out;
    save_rl_database(db, out);
    return out.str();
}

}  // namespace

TEST_CASE("node lookups return the stored cell exactly") {
    auto db = small_db();
    for (std::size_t m = 0; m < db.materials().size(); ++m) {
        for (std::size_t f = 0; f < db.freqs().size(); ++f) {
            for (std::size_t a = 0; a < db.angles_deg().size(); ++a) {
                CHECK(db.lookup(db.materials()[m].name, db.freqs()[f], db.angles_deg()[a]) == db.at(m, f, a));
            }
        }
    }
    CHECK(db.at(2, 1, 0) == reflection_loss(glass(), 100.0, 0.0));
}

TEST_CASE("interpolation is bilinear in log frequency and angle") {
    const std::vector<MaterialParams> mats{glass()};
    const std::vector<double> freqs{10.0, 1000.0};
    const std::vector<double> angles{0.0, 10.0};
    RLDatabase db(mats, freqs, angles, {1.0, 3.0, 5.0, 7.0}, 0.0);
    CHECK(db.lookup("glass", 10.0, 5.0) == doctest::Approx(2.0));
    CHECK(db.lookup("glass", 100.0, 0.0) == doctest::Approx(3.0));
    CHECK(db.lookup("glass", 100.0, 5.0) == doctest::Approx(4.0));
    CHECK(db.lookup("glass", 1000.0, 2.5) == doctest::Approx(5.5));
}

TEST_CASE("interpolation error against direct evaluation stays small on a 1 degree grid") {
    auto db = small_db();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> angle(0.0, 85.0);
    double worst = 0.0;
    for (int i = 0; i < 2000; ++i) {
        const double a = angle(rng);
        for (const auto& m : db.materials()) {
            const double direct = reflection_loss(m, 100.0, a * kPi / 180.0);
            worst = std::max(worst, std::abs(db.lookup(m.name, 100.0, a) - direct));
        }
    }
    CHECK(worst < 0.05);
}

TEST_CASE("queries outside the grid hull are rejected") {
    auto db = small_db();
    CHECK_THROWS_AS(db.lookup("glass", 27.0, 10.0), OutOfRange);
    CHECK_THROWS_AS(db.lookup("glass", 301.0, 10.0), OutOfRange);
    CHECK_THROWS_AS(db.lookup("glass", 100.0, 85.5), OutOfRange);
    CHECK_THROWS_AS(db.lookup("glass", 100.0, -0.5), OutOfRange);
    CHECK_NOTHROW(db.lookup("glass", 100.0, 85.0 + 1e-12));
    CHECK_THROWS_AS(db.lookup("steel", 100.0, 10.0), InvalidArgument);
}

TEST_CASE("save then load is idempotent and preserves the header") {
    auto db = small_db(kFittedRoughnessKappa);
    const std::string first = dump(db);
    std::istringstream in(first);
    auto loaded = load_rl_database(in, "mem");
    CHECK(loaded.materials() == db.materials());
    CHECK(loaded.freqs() == db.freqs());
    CHECK(loaded.angles_deg() == db.angles_deg());
    CHECK(loaded.kappa() == db.kappa());
    CHECK(loaded.build_stamp() == "test");
    for (std::size_t i = 0; i < db.values().size(); ++i) {
        CHECK(loaded.values()[i] == doctest::Approx(db.values()[i]).epsilon(1e-5));
    }
    const std::string second = dump(loaded);
    CHECK(second == first);
    std::istringstream again(second);
    CHECK(load_rl_database(again) == loaded);
}

TEST_CASE("rebuilding with the same inputs is byte-identical") {
    CHECK(dump(small_db()) == dump(small_db()));
}

TEST_CASE("loader rejects damaged files") {
    const std::string good = dump(small_db());

    SUBCASE("wrong version") {
        std::string text = good;
        text.replace(0, 10, "#version=9");
        std::istringstream in(text);
        CHECK_THROWS_AS(load_rl_database(in), VersionError);
    }
    SUBCASE("truncated") {
        std::istringstream in(good.substr(0, good.size() / 2));
        CHECK_THROWS_AS(load_rl_database(in), ParseError);
    }
    SUBCASE("bad field count") {
        std::istringstream in(good + "glass,100,3\n");
        CHECK_THROWS_AS(load_rl_database(in), ParseError);
    }
    SUBCASE("duplicate cell") {
        const auto last = good.rfind('\n', good.size() - 2);
        std::istringstream in(good + good.substr(last + 1));
        CHECK_THROWS_AS(load_rl_database(in), ParseError);
    }
    SUBCASE("missing header") {
        std::istringstream in("material,f_ghz,angle_deg,rl_db\n");
        CHECK_THROWS_AS(load_rl_database(in), ParseError);
    }
    SUBCASE("negative loss") {
        std::string text = good;
        const auto pos = text.find("wood,28,0,");
        text.replace(pos, 10, "wood,28,0,-");
        std::istringstream in(text);
        CHECK_THROWS(load_rl_database(in));
    }
}

TEST_CASE("constructor validates shape and grids") {
    const std::vector<MaterialParams> mats{glass()};
    CHECK_THROWS_AS(RLDatabase(mats, {100.0}, {0.0, 10.0}, {1.0}, 0.0), InvalidArgument);
    CHECK_THROWS_AS(RLDatabase(mats, {100.0}, {10.0, 0.0}, {1.0, 2.0}, 0.0), InvalidArgument);
    CHECK_THROWS_AS(RLDatabase(mats, {100.0}, {0.0, 10.0}, {1.0, NAN}, 0.0), InvalidArgument);
    const std::vector<double> freqs{100.0};
    const std::vector<double> angles{0.0, 90.0};
    CHECK_THROWS_AS(build_rl_database(mats, freqs, angles, 0.0), InvalidArgument);
}
