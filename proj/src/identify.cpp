// SPDX-License-Identifier: Apache-2.0
#include "matid/identify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "matid/error.hpp"
#include "text_util.hpp"

namespace matid {

namespace {

constexpr double kMatchSlackDb = 1e-9;

std::int64_t quantize(double v, double delta) {
    if (!std::isfinite(delta)) return 0;
    const double cell = delta > 0.0 ? delta : 1e-9;
    return static_cast<std::int64_t>(std::llround(v / cell));
}

std::string material_set(const std::set<std::string>& s) {
    std::string out;
    for (const auto& m : s) {
        if (!out.empty()) out += '|';
        out += m;
    }
    return out;
}

std::vector<RPKey> keys_of(const TrajectoryEvidence& ev) {
    if (!ev.keys.empty() || ev.survivors.empty()) return ev.keys;
    std::vector<RPKey> keys;
    for (const auto& [k, m] : ev.survivors.front().assignment) keys.push_back(k);
    return keys;
}

// Same key assigned two different materials within one candidate.
bool self_inconsistent(const SequenceCandidate& c) {
    for (std::size_t i = 0; i < c.assignment.size(); ++i) {
        for (std::size_t j = i + 1; j < c.assignment.size(); ++j) {
            if (c.assignment[i].first == c.assignment[j].first && c.assignment[i].second != c.assignment[j].second) {
                return true;
            }
        }
    }
    return false;
}

std::map<RPKey, std::set<std::string>> allowed_materials(const std::vector<TrajectoryEvidence>& evidence,
                                                         const std::vector<std::vector<RPKey>>& keys) {
    std::map<RPKey, std::set<std::string>> allowed;
    std::set<RPKey> initialised;
    for (std::size_t t = 0; t < evidence.size(); ++t) {
        std::map<RPKey, std::set<std::string>> local;
        for (const auto& k : keys[t]) local[k];
        for (const auto& c : evidence[t].survivors) {
            for (const auto& [k, m] : c.assignment) local[k].insert(m);
        }
        for (auto& [k, mats] : local) {
            if (initialised.insert(k).second) {
                allowed[k] = std::move(mats);
            } else {
                auto& cur = allowed[k];
                std::set<std::string> both;
                std::set_intersection(cur.begin(), cur.end(), mats.begin(), mats.end(),
                                      std::inserter(both, both.begin()));
                cur = std::move(both);
            }
        }
    }
    return allowed;
}

// Enumerates joint assignments over one connected group of trajectories and
// records which candidates take part in at least one of them.
class SupportSearch {
public:
    SupportSearch(std::vector<TrajectoryEvidence>& evidence, std::vector<std::size_t> group, std::size_t budget)
        : evidence_(evidence), order_(std::move(group)), budget_(budget) {
        std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
            return evidence_[a].survivors.size() < evidence_[b].survivors.size();
        });
        for (auto t : order_) supported_[t].assign(evidence_[t].survivors.size(), false);
        chosen_.assign(order_.size(), 0);
    }

    /// False when the node budget ran out.
    bool run() {
        descend(0);
        return !exhausted_;
    }

    const std::vector<bool>& supported(std::size_t t) { return supported_[t]; }

private:
    void descend(std::size_t depth) {
        if (exhausted_) return;
        if (depth == order_.size()) {
            for (std::size_t i = 0; i < order_.size(); ++i) supported_[order_[i]][chosen_[i]] = true;
            return;
        }
        const auto& cands = evidence_[order_[depth]].survivors;
        for (std::size_t c = 0; c < cands.size(); ++c) {
            if (++nodes_ > budget_) {
                exhausted_ = true;
                return;
            }
            std::vector<RPKey> added;
            bool ok = true;
            for (const auto& [k, m] : cands[c].assignment) {
                auto it = current_.find(k);
                if (it == current_.end()) {
                    current_.emplace(k, m);
                    added.push_back(k);
                } else if (it->second != m) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                chosen_[depth] = c;
                descend(depth + 1);
            }
            for (const auto& k : added) current_.erase(k);
            if (exhausted_) return;
        }
    }

    std::vector<TrajectoryEvidence>& evidence_;
    std::vector<std::size_t> order_;
    std::size_t budget_;
    std::size_t nodes_ = 0;
    bool exhausted_ = false;
    std::map<std::size_t, std::vector<bool>> supported_;
    std::vector<std::size_t> chosen_;
    std::map<RPKey, std::string> current_;
};

std::vector<std::vector<std::size_t>> connected_groups(const std::vector<std::vector<RPKey>>& keys) {
    const std::size_t n = keys.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::map<RPKey, std::size_t> owner;
    for (std::size_t t = 0; t < n; ++t) {
        for (const auto& k : keys[t]) {
            auto [it, fresh] = owner.emplace(k, t);
            if (!fresh) parent[find(t)] = find(it->second);
        }
    }
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t t = 0; t < n; ++t) groups[find(t)].push_back(t);
    std::vector<std::vector<std::size_t>> out;
    for (auto& [root, members] : groups) out.push_back(std::move(members));
    return out;
}

}  // namespace

std::string to_string(const RPKey& key) {
    std::string s = key.facet_id + "@" + std::to_string(key.quantized_point[0]) + ";" +
                    std::to_string(key.quantized_point[1]) + ";" + std::to_string(key.quantized_point[2]);
    if (key.cluster > 0) s += "#" + std::to_string(key.cluster);
    return s;
}

RPRegistry::RPRegistry(double delta) : delta_(delta) {
    if (!(delta >= 0.0)) throw InvalidArgument("RP tolerance must be non-negative");
}

RPKey RPRegistry::key_for(const std::string& facet_id, const Vec3& point) {
    for (const auto& e : entries_) {
        if (e.key.facet_id == facet_id && distance(e.point, point) <= delta_) return e.key;
    }
    RPKey key{facet_id, {quantize(point.x, delta_), quantize(point.y, delta_), quantize(point.z, delta_)}, 0};
    for (const auto& e : entries_) {
        if (e.key.facet_id == key.facet_id && e.key.quantized_point == key.quantized_point) {
            key.cluster = std::max(key.cluster, e.key.cluster + 1);
        }
    }
    entries_.push_back({key, point});
    return key;
}

const Vec3& RPRegistry::representative(const RPKey& key) const {
    for (const auto& e : entries_) {
        if (e.key == key) return e.point;
    }
    throw InvalidArgument("unknown RP key " + to_string(key));
}

ObservedTrajectory observe(const Trajectory& traj, std::string id, RPRegistry& registry) {
    ObservedTrajectory obs{std::move(id), {}};
    for (const auto& h : traj.hops) obs.hops.push_back({registry.key_for(h.facet_id, h.rp), h.theta_i});
    return obs;
}

std::vector<SequenceCandidate> enumerate_sequences(const ObservedTrajectory& traj,
                                                   std::span<const std::string> palette, const HopLossFn& loss) {
    if (palette.empty()) throw InvalidArgument("material palette is empty");
    const std::size_t k = traj.hops.size();
    if (k == 0) throw InvalidArgument("trajectory '" + traj.id + "' has no reflections");

    std::vector<std::vector<double>> table(k, std::vector<double>(palette.size()));
    for (std::size_t h = 0; h < k; ++h) {
        for (std::size_t m = 0; m < palette.size(); ++m) table[h][m] = loss(palette[m], h, traj.hops[h].theta_i);
    }

    std::vector<SequenceCandidate> out;
    std::vector<std::size_t> digits(k, 0);
    while (true) {
        SequenceCandidate c;
        for (std::size_t h = 0; h < k; ++h) {
            c.assignment.emplace_back(traj.hops[h].key, palette[digits[h]]);
            c.per_hop_rl.push_back(table[h][digits[h]]);
            c.total_rl += table[h][digits[h]];
        }
        out.push_back(std::move(c));

        std::size_t pos = k;
        while (pos > 0) {
            --pos;
            if (++digits[pos] < palette.size()) break;
            digits[pos] = 0;
            if (pos == 0) return out;
        }
    }
}

std::vector<SequenceCandidate> enumerate_sequences(const ObservedTrajectory& traj,
                                                   std::span<const MaterialParams> palette, const RLDatabase& db,
                                                   double f_ghz) {
    std::vector<std::string> names;
    for (const auto& m : palette) {
        if (!db.has_material(m.name)) throw InvalidArgument("material '" + m.name + "' missing from RL database");
        names.push_back(m.name);
    }
    auto loss = [&](std::string_view material, std::size_t hop, double theta) {
        try {
            return db.lookup(material, f_ghz, rad2deg(theta));
        } catch (const OutOfRange& e) {
            throw OutOfRange("trajectory '" + traj.id + "' hop " + std::to_string(hop + 1) + ": " + e.what());
        }
    };
    return enumerate_sequences(traj, names, loss);
}

std::vector<SequenceCandidate> match_measurement(std::span<const SequenceCandidate> candidates,
                                                 const MeasurementRecord& m) {
    if (!(m.uncertainty_u >= 0.0)) throw InvalidArgument("measurement uncertainty must be non-negative");
    std::vector<SequenceCandidate> out;
    for (const auto& c : candidates) {
        if (std::abs(c.total_rl - m.measured_total_rl) <= m.uncertainty_u + kMatchSlackDb) out.push_back(c);
    }
    return out;
}

bool BeliefState::resolved() const {
    return std::all_of(materials.begin(), materials.end(), [](const auto& kv) { return kv.second.size() == 1; });
}

BeliefState merge_candidates(std::vector<TrajectoryEvidence> evidence, const MergeOptions& options) {
    std::vector<std::vector<RPKey>> keys;
    for (auto& ev : evidence) {
        keys.push_back(keys_of(ev));
        std::erase_if(ev.survivors, self_inconsistent);
    }

    std::map<RPKey, std::set<std::string>> allowed;
    for (bool changed = true; changed;) {
        changed = false;
        allowed = allowed_materials(evidence, keys);
        for (auto& ev : evidence) {
            const auto removed = std::erase_if(ev.survivors, [&](const SequenceCandidate& c) {
                return std::any_of(c.assignment.begin(), c.assignment.end(),
                                   [&](const auto& km) { return !allowed[km.first].contains(km.second); });
            });
            if (removed > 0) changed = true;
        }
    }

    BeliefState state;
    const bool arc_consistent = std::none_of(allowed.begin(), allowed.end(), [](auto& kv) { return kv.second.empty(); }) &&
                                std::none_of(evidence.begin(), evidence.end(), [](auto& ev) { return ev.survivors.empty(); });
    if (arc_consistent) {
        for (const auto& group : connected_groups(keys)) {
            if (group.size() < 2) continue;
            SupportSearch search(evidence, group, options.search_budget);
            if (!search.run()) {
                state.exact = false;
                continue;
            }
            for (auto t : group) {
                const auto& keep = search.supported(t);
                std::vector<SequenceCandidate> kept;
                for (std::size_t c = 0; c < keep.size(); ++c) {
                    if (keep[c]) kept.push_back(std::move(evidence[t].survivors[c]));
                }
                evidence[t].survivors = std::move(kept);
            }
        }
        allowed = allowed_materials(evidence, keys);
    }

    for (const auto& [k, mats] : allowed) {
        if (mats.empty()) {
            state.contradictions.push_back({k, {}, "no material at " + to_string(k) +
                                                       " is consistent with every trajectory through it"});
        }
    }
    for (const auto& ev : evidence) {
        if (ev.survivors.empty()) {
            state.contradictions.push_back({std::nullopt, ev.trajectory_id, "no surviving sequence of materials"});
        }
    }
    state.materials = std::move(allowed);
    state.trajectories = std::move(evidence);
    return state;
}

GroundTruth ground_truth_from_scene(const Scene& scene) {
    GroundTruth truth;
    for (const auto& f : scene.facets()) {
        if (f.material != kUnknownMaterial) truth.emplace(f.id, f.material);
    }
    return truth;
}

MeasurementRecord simulate_measurement(const Scene& scene, const Trajectory& traj, std::string trajectory_id,
                                       const GroundTruth& truth, std::span<const MaterialParams> palette,
                                       const SimulationConfig& config) {
    if (!(config.noise_sigma_db >= 0.0)) throw InvalidArgument("noise sigma must be non-negative");
    if (traj.hops.empty()) throw InvalidArgument("trajectory has no reflections");
    double total = 0.0;
    for (const auto& hop : traj.hops) {
        scene.facet_index(hop.facet_id);
        auto it = truth.find(hop.facet_id);
        if (it == truth.end()) throw InvalidArgument("no ground-truth material for facet '" + hop.facet_id + "'");
        total += reflection_loss(find_material(palette, it->second), config.f_ghz, hop.theta_i, config.kappa);
    }

    double noise = 0.0;
    if (config.noise_sigma_db > 0.0) {
        std::mt19937_64 rng(config.seed);
        std::normal_distribution<double> gauss(0.0, config.noise_sigma_db);
        noise = gauss(rng);
    }
    const double free_space = fspl(config.f_ghz, traj.total_length);
    const double observed_rl = std::max(0.0, total + noise);
    const double p_rx = config.p_tx_dbm - free_space - observed_rl;
    const auto budget = extract_total_rl(config.p_tx_dbm, p_rx, config.f_ghz, traj.total_length);
    return {std::move(trajectory_id), budget.rl_total, config.uncertainty_u};
}

std::vector<MeasurementRecord> parse_measurements(std::istream& in, const std::string& source) {
    std::vector<MeasurementRecord> out;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        if (line == "trajectory_id,measured_rl_db,u_db") continue;
        const auto f = detail::split(line, ',');
        if (f.size() != 3) throw ParseError(source, lineno, "expected trajectory_id,measured_rl_db,u_db");
        const auto rl = detail::parse_double(f[1]);
        const auto u = detail::parse_double(f[2]);
        if (!rl || !u) throw ParseError(source, lineno, "bad numeric field");
        if (*u < 0.0) throw ParseError(source, lineno, "uncertainty must be non-negative");
        const std::string id(detail::trim(f[0]));
        if (id.empty()) throw ParseError(source, lineno, "empty trajectory id");
        for (const auto& r : out) {
            if (r.trajectory_id == id) throw ParseError(source, lineno, "duplicate trajectory id '" + id + "'");
        }
        out.push_back({id, *rl, *u});
    }
    return out;
}

std::vector<MeasurementRecord> load_measurements(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open measurement file '" + path + "'");
    return parse_measurements(in, path);
}

void write_measurements(std::ostream& out, std::span<const MeasurementRecord> records) {
    out << "trajectory_id,measured_rl_db,u_db\n";
    for (const auto& r : records) {
        out << r.trajectory_id << ',' << detail::format_sig(r.measured_total_rl, 10) << ','
            << detail::format_sig(r.uncertainty_u, 10) << '\n';
    }
}

std::string trajectory_id(std::size_t tx_index, std::size_t rx_index, const Trajectory& traj) {
    return "tx" + std::to_string(tx_index) + ":rx" + std::to_string(rx_index) + ":" + traj.path_key();
}

MeasurementSource measurements_from(std::span<const MeasurementRecord> records) {
    std::map<std::string, MeasurementRecord, std::less<>> by_id;
    for (const auto& r : records) by_id.emplace(r.trajectory_id, r);
    return [by_id = std::move(by_id)](const std::string& id, const Trajectory&) -> std::optional<MeasurementRecord> {
        auto it = by_id.find(id);
        if (it == by_id.end()) return std::nullopt;
        return it->second;
    };
}

std::string_view to_string(FacetStatus s) {
    switch (s) {
        case FacetStatus::Resolved: return "resolved";
        case FacetStatus::Ambiguous: return "ambiguous";
        case FacetStatus::Uncovered: return "uncovered";
        case FacetStatus::Contradicted: return "contradicted";
    }
    return "uncovered";
}

IdentifyReport identify_loop(const Scene& scene, std::span<const Vec3> tx_positions,
                             std::span<const Vec3> rx_positions, std::span<const MaterialParams> palette,
                             const RLDatabase& db, const IdentifyConfig& config, const MeasurementSource& measure) {
    if (tx_positions.empty() || rx_positions.empty()) throw InvalidArgument("need at least one TX and one RX");
    if (palette.empty()) throw InvalidArgument("material palette is empty");

    IdentifyReport report;
    RPRegistry registry(config.rp_delta);
    std::vector<TrajectoryEvidence> evidence;

    bool done = false;
    for (std::size_t i = 0; i < tx_positions.size() && !done; ++i) {
        for (std::size_t j = 0; j < rx_positions.size() && !done; ++j) {
            ++report.iterations;
            for (const auto& traj : trace(scene, tx_positions[i], rx_positions[j], config.max_bounces)) {
                const std::string id = trajectory_id(i, j, traj);
                auto record = measure(id, traj);
                if (!record) continue;
                if (!config.use_record_uncertainty) record->uncertainty_u = config.u_db;

                const auto obs = observe(traj, id, registry);
                auto table = enumerate_sequences(obs, palette, db, config.f_ghz);
                auto survivors = match_measurement(table, *record);

                TrajectoryReport tr;
                tr.id = id;
                tr.measurement = *record;
                tr.candidates = table.size();
                tr.matched = survivors.size();
                for (std::size_t h = 0; h < obs.hops.size(); ++h) {
                    tr.keys.push_back(obs.hops[h].key);
                    tr.theta_i.push_back(obs.hops[h].theta_i);
                    double lo = std::numeric_limits<double>::infinity();
                    double hi = -lo;
                    for (const auto& m : palette) {
                        const double v = db.lookup(m.name, config.f_ghz, rad2deg(obs.hops[h].theta_i));
                        lo = std::min(lo, v);
                        hi = std::max(hi, v);
                    }
                    tr.hop_rl_spread.push_back(hi - lo);
                    report.rp_points.emplace(obs.hops[h].key, registry.representative(obs.hops[h].key));
                }
                tr.table = std::move(table);
                if (survivors.empty()) report.no_hypothesis.push_back(id);
                evidence.push_back({id, tr.keys, std::move(survivors)});
                report.trajectories.push_back(std::move(tr));
            }

            report.belief = merge_candidates(evidence, config.merge);
            report.contradictions_per_iteration.push_back(report.belief.contradictions.size());
            if (config.stop_when_resolved && !report.belief.materials.empty() && report.belief.consistent() &&
                report.belief.resolved()) {
                done = true;
            }
        }
    }

    for (const auto& f : scene.facets()) {
        FacetReport fr{f.id, FacetStatus::Uncovered, {}};
        bool covered = false;
        bool empty = false;
        bool all_single = true;
        for (const auto& [k, mats] : report.belief.materials) {
            if (k.facet_id != f.id) continue;
            covered = true;
            if (mats.empty()) empty = true;
            if (mats.size() != 1) all_single = false;
            fr.materials.insert(mats.begin(), mats.end());
        }
        if (covered) {
            if (empty) {
                fr.status = FacetStatus::Contradicted;
            } else if (all_single && fr.materials.size() == 1) {
                fr.status = FacetStatus::Resolved;
            } else {
                fr.status = FacetStatus::Ambiguous;
            }
        }
        report.facets.push_back(std::move(fr));
    }
    return report;
}

void write_identify_report(std::ostream& out, const IdentifyReport& report, const IdentifyConfig& config) {
    out << "#report=identify\n";
    out << "#f_ghz=" << detail::format_sig(config.f_ghz, 10) << '\n';
    out << "#u_db=" << detail::format_sig(config.u_db, 10) << '\n';
    out << "#iterations=" << report.iterations << '\n';
    out << "#exact=" << (report.belief.exact ? "true" : "false") << '\n';
    out << "#contradictions=" << report.belief.contradictions.size() << '\n';

    out << "[rps]\nrp_key,facet_id,x,y,z,materials\n";
    for (const auto& [k, mats] : report.belief.materials) {
        Vec3 p;
        if (auto it = report.rp_points.find(k); it != report.rp_points.end()) p = it->second;
        out << to_string(k) << ',' << k.facet_id << ',' << detail::format_fixed(p.x, 4) << ','
            << detail::format_fixed(p.y, 4) << ',' << detail::format_fixed(p.z, 4) << ',' << material_set(mats)
            << '\n';
    }

    out << "[facets]\nfacet_id,status,materials\n";
    for (const auto& f : report.facets) {
        out << f.facet_id << ',' << to_string(f.status) << ',' << material_set(f.materials) << '\n';
    }

    out << "[trajectories]\ntrajectory_id,measured_rl_db,u_db,theta_deg,candidates,matched,survivors,hop_rl_spread_db\n";
    for (const auto& t : report.trajectories) {
        std::size_t survivors = 0;
        for (const auto& ev : report.belief.trajectories) {
            if (ev.trajectory_id == t.id) survivors = ev.survivors.size();
        }
        std::string angles, spreads;
        for (std::size_t h = 0; h < t.theta_i.size(); ++h) {
            if (h) {
                angles += '|';
                spreads += '|';
            }
            angles += detail::format_fixed(rad2deg(t.theta_i[h]), 2);
            spreads += detail::format_fixed(t.hop_rl_spread[h], 2);
        }
        out << t.id << ',' << detail::format_sig(t.measurement.measured_total_rl, 8) << ','
            << detail::format_sig(t.measurement.uncertainty_u, 8) << ',' << angles << ',' << t.candidates << ','
            << t.matched << ',' << survivors << ',' << spreads << '\n';
    }

    out << "[survivors]\ntrajectory_id,sequence,per_hop_rl_db,total_rl_db\n";
    for (const auto& ev : report.belief.trajectories) {
        for (const auto& c : ev.survivors) {
            std::string seq, rls;
            for (std::size_t h = 0; h < c.assignment.size(); ++h) {
                if (h) {
                    seq += '|';
                    rls += '|';
                }
                seq += c.assignment[h].first.facet_id + "=" + c.assignment[h].second;
                rls += detail::format_fixed(c.per_hop_rl[h], 2);
            }
            out << ev.trajectory_id << ',' << seq << ',' << rls << ',' << detail::format_fixed(c.total_rl, 2) << '\n';
        }
    }

    out << "[contradictions]\nrp_key,trajectory_id,message\n";
    for (const auto& c : report.belief.contradictions) {
        out << (c.key ? to_string(*c.key) : "") << ',' << c.trajectory_id << ',' << c.message << '\n';
    }
}

}  // namespace matid
