// SPDX-License-Identifier: Apache-2.0
//
// Material identification from total reflection loss along traced
// trajectories: enumerate every sequence of materials a trajectory could have
// met, keep those compatible with the measured total RL, and propagate the
// surviving material sets across trajectories that share reflection points.
//
#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "matid/em_core.hpp"
#include "matid/rl_db.hpp"
#include "matid/scene.hpp"

namespace matid {

/// Identity of a reflection point: facet plus a quantized location.
struct RPKey {
    std::string facet_id;
    std::array<std::int64_t, 3> quantized_point{};
    std::uint32_t cluster = 0;  // disambiguates distinct points that round to the same cell

    friend auto operator<=>(const RPKey&, const RPKey&) = default;
    friend bool operator==(const RPKey&, const RPKey&) = default;
};

std::string to_string(const RPKey& key);

/// Hands out RPKeys so that two hops share a key iff they lie on the same
/// facet within `delta` metres of the key's first point. An infinite delta
/// collapses every point of a facet onto one key.
class RPRegistry {
public:
    explicit RPRegistry(double delta = 0.01);

    RPKey key_for(const std::string& facet_id, const Vec3& point);
    double delta() const { return delta_; }
    /// First point registered under the key.
    const Vec3& representative(const RPKey& key) const;

private:
    struct Entry {
        RPKey key;
        Vec3 point;
    };
    double delta_;
    std::vector<Entry> entries_;
};

struct ObservedHop {
    RPKey key;
    double theta_i = 0.0;  // rad
};

/// A trajectory reduced to what identification needs.
struct ObservedTrajectory {
    std::string id;
    std::vector<ObservedHop> hops;
};

ObservedTrajectory observe(const Trajectory& traj, std::string id, RPRegistry& registry);

struct SequenceCandidate {
    std::vector<std::pair<RPKey, std::string>> assignment;
    std::vector<double> per_hop_rl;  // dB
    double total_rl = 0.0;           // dB
};

/// Per-hop reflection loss for a material, used to fill candidate tables.
using HopLossFn = std::function<double(std::string_view material, std::size_t hop, double theta_i)>;

/// |palette|^k candidates in lexicographic palette order, first hop most significant.
std::vector<SequenceCandidate> enumerate_sequences(const ObservedTrajectory& traj,
                                                   std::span<const std::string> palette, const HopLossFn& loss);

/// Fills per-hop losses from the database. Throws OutOfRange naming the hop
/// whose angle falls outside the database.
std::vector<SequenceCandidate> enumerate_sequences(const ObservedTrajectory& traj,
                                                   std::span<const MaterialParams> palette, const RLDatabase& db,
                                                   double f_ghz);

struct MeasurementRecord {
    std::string trajectory_id;
    double measured_total_rl = 0.0;  // dB
    double uncertainty_u = 0.0;      // dB, closed interval +-u
};

/// Candidates with |total_rl - measured| <= u, order preserved. An empty
/// result is the no-hypothesis outcome.
std::vector<SequenceCandidate> match_measurement(std::span<const SequenceCandidate> candidates,
                                                 const MeasurementRecord& m);

struct TrajectoryEvidence {
    std::string trajectory_id;
    std::vector<RPKey> keys;  // one per hop; taken from the first survivor when empty
    std::vector<SequenceCandidate> survivors;
};

struct Contradiction {
    std::optional<RPKey> key;
    std::string trajectory_id;
    std::string message;
};

struct BeliefState {
    std::map<RPKey, std::set<std::string>> materials;
    std::vector<TrajectoryEvidence> trajectories;
    std::vector<Contradiction> contradictions;
    /// False when the joint-support refinement exceeded its budget and the
    /// result is only arc consistent.
    bool exact = true;

    bool consistent() const { return contradictions.empty(); }
    /// Every covered key has exactly one material.
    bool resolved() const;
};

struct MergeOptions {
    /// Upper bound on search nodes spent on joint-support refinement per
    /// connected group of trajectories.
    std::size_t search_budget = 1'000'000;
};

/// Constraint propagation to a fixpoint: a material survives at a key iff it
/// appears there in a surviving candidate of every trajectory covering the
/// key, and a candidate survives iff all its materials survive. A bounded
/// search then drops candidates that no joint assignment supports.
BeliefState merge_candidates(std::vector<TrajectoryEvidence> evidence, const MergeOptions& options = {});

struct SimulationConfig {
    double p_tx_dbm = 30.0;
    double f_ghz = 100.0;
    double noise_sigma_db = 0.0;
    std::uint64_t seed = 0;
    double kappa = 0.0;
    double uncertainty_u = 1.0;  // copied into the record
};

/// facet id -> material name.
using GroundTruth = std::map<std::string, std::string, std::less<>>;

/// Material labels carried by the scene, skipping "unknown".
GroundTruth ground_truth_from_scene(const Scene& scene);

/// Received power from the exact per-hop losses plus seeded Gaussian noise,
/// pushed back through extract_total_rl. Throws InvalidArgument when a hop's
/// facet has no ground-truth material or the material is not in the palette.
MeasurementRecord simulate_measurement(const Scene& scene, const Trajectory& traj, std::string trajectory_id,
                                       const GroundTruth& truth, std::span<const MaterialParams> palette,
                                       const SimulationConfig& config);

/// Text form: rows `trajectory_id,measured_rl_db,u_db`, '#' comments, optional header row.
std::vector<MeasurementRecord> parse_measurements(std::istream& in, const std::string& source = "<measurements>");
std::vector<MeasurementRecord> load_measurements(const std::string& path);
void write_measurements(std::ostream& out, std::span<const MeasurementRecord> records);

/// Stable id used to key measurements: "tx<i>:rx<j>:<facet>[>facet...]".
std::string trajectory_id(std::size_t tx_index, std::size_t rx_index, const Trajectory& traj);

struct IdentifyConfig {
    double f_ghz = 100.0;
    double u_db = 1.0;
    int max_bounces = 2;
    double rp_delta = 0.01;  // m
    bool stop_when_resolved = true;
    /// Use the measurement record's own uncertainty instead of u_db.
    bool use_record_uncertainty = false;
    MergeOptions merge;
};

/// Returns the measurement for a trajectory, or nullopt when it was not measured.
using MeasurementSource = std::function<std::optional<MeasurementRecord>(const std::string& id, const Trajectory&)>;

MeasurementSource measurements_from(std::span<const MeasurementRecord> records);

enum class FacetStatus { Resolved, Ambiguous, Uncovered, Contradicted };
std::string_view to_string(FacetStatus s);

struct FacetReport {
    std::string facet_id;
    FacetStatus status = FacetStatus::Uncovered;
    std::set<std::string> materials;
};

struct TrajectoryReport {
    std::string id;
    std::vector<RPKey> keys;
    std::vector<double> theta_i;
    MeasurementRecord measurement;
    std::size_t candidates = 0;
    std::size_t matched = 0;  // after tolerance matching, before merging
    /// Per hop, max - min reflection loss over the palette. Small spreads mean
    /// the measurement barely constrains that hop.
    std::vector<double> hop_rl_spread;
    std::vector<SequenceCandidate> table;
};

struct IdentifyReport {
    BeliefState belief;
    std::vector<FacetReport> facets;
    std::vector<TrajectoryReport> trajectories;
    std::map<RPKey, Vec3> rp_points;
    std::size_t iterations = 0;
    std::vector<std::string> no_hypothesis;  // trajectory ids with no matching candidate
    /// Contradictions seen at the end of each iteration.
    std::vector<std::size_t> contradictions_per_iteration;

    bool has_contradiction() const { return !belief.contradictions.empty(); }
};

/// Steps through (tx, rx) pairs in order: trace, enumerate, match, merge.
/// Stops early once every covered key is resolved (if configured).
IdentifyReport identify_loop(const Scene& scene, std::span<const Vec3> tx_positions,
                             std::span<const Vec3> rx_positions, std::span<const MaterialParams> palette,
                             const RLDatabase& db, const IdentifyConfig& config, const MeasurementSource& measure);

/// Sectioned CSV: [rps], [facets], [trajectories], [contradictions].
void write_identify_report(std::ostream& out, const IdentifyReport& report, const IdentifyConfig& config);

}  // namespace matid
