// SPDX-License-Identifier: Apache-2.0
//
// Closed-loop identification trial on a random three-facet scene: assign
// random materials, simulate noisy measurements for every traced path, run
// identify_loop, and score the outcome per covered facet.
//
#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "matid/identify.hpp"
#include "matid/rl_db.hpp"
#include "trace_oracle.hpp"

namespace oracle {

// Paths with any hop beyond this angle are left unmeasured: above it the
// single-hop losses of the three materials crowd to within 2u of each other.
inline constexpr double kSeparationMaxAngleDeg = 60.0;

struct TrialOutcome {
    int covered = 0;
    int resolved_correct = 0;
    int truth_eliminated = 0;
    bool within_bound = true;  // every measurement had |noise| + interpolation error <= u
    int measurements = 0;
};

inline const matid::RLDatabase& e2e_database() {
    static const matid::RLDatabase db = [] {
        const auto mats = matid::builtin_materials();
        const std::vector<double> freqs{100.0};
        return matid::build_rl_database(mats, freqs, matid::default_angle_grid(), 0.0);
    }();
    return db;
}

inline TrialOutcome run_trial(std::uint64_t seed, double noise_sigma, double u = 1.0) {
    const auto palette = matid::builtin_materials();
    const auto& db = e2e_database();
    const RandomScene rs = random_scene(seed, 3);
    const matid::Scene scene = rs.scene();

    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<std::size_t> pick(0, palette.size() - 1);
    std::uniform_real_distribution<double> coord(-1.5, 1.5);
    matid::GroundTruth truth;
    for (const auto& r : rs.rects) truth[r.id] = palette[pick(rng)].name;

    std::vector<matid::Vec3> txs{rs.tx}, rxs{rs.rx};
    for (int i = 0; i < 2; ++i) {
        txs.push_back({coord(rng), coord(rng), coord(rng)});
        rxs.push_back({coord(rng), coord(rng), coord(rng)});
    }

    TrialOutcome out;
    std::uint64_t draw = 0;
    matid::MeasurementSource measure = [&](const std::string& id,
                                           const matid::Trajectory& t) -> std::optional<matid::MeasurementRecord> {
        double exact = 0.0, interpolated = 0.0;
        for (const auto& h : t.hops) {
            const double deg = matid::rad2deg(h.theta_i);
            if (deg > kSeparationMaxAngleDeg) return std::nullopt;
            const auto& mat = matid::find_material(palette, truth.at(h.facet_id));
            exact += matid::reflection_loss(mat, 100.0, h.theta_i);
            interpolated += db.lookup(mat.name, 100.0, deg);
        }
        matid::SimulationConfig cfg;
        cfg.noise_sigma_db = noise_sigma;
        cfg.seed = seed * 1000003ULL + draw++;
        cfg.uncertainty_u = u;
        auto rec = matid::simulate_measurement(scene, t, id, truth, palette, cfg);
        const double noise = rec.measured_total_rl - exact;
        if (std::abs(noise) + std::abs(interpolated - exact) > u) out.within_bound = false;
        ++out.measurements;
        return rec;
    };

    matid::IdentifyConfig cfg;
    cfg.u_db = u;
    cfg.rp_delta = std::numeric_limits<double>::infinity();
    cfg.max_bounces = 2;
    const auto report = matid::identify_loop(scene, txs, rxs, palette, db, cfg, measure);

    for (const auto& f : report.facets) {
        if (f.status == matid::FacetStatus::Uncovered) continue;
        ++out.covered;
        const std::string& t = truth.at(f.facet_id);
        if (f.status == matid::FacetStatus::Resolved && f.materials == std::set<std::string>{t}) {
            ++out.resolved_correct;
        }
        if (!f.materials.contains(t)) ++out.truth_eliminated;
    }
    return out;
}

}  // namespace oracle
