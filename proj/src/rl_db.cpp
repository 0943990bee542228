// SPDX-License-Identifier: Apache-2.0
#include "matid/rl_db.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>

#include "matid/error.hpp"
#include "text_util.hpp"

namespace matid {

namespace {

constexpr double kHullSlack = 1e-9;

void require_ascending(const std::vector<double>& grid, const char* what) {
    if (grid.empty()) throw InvalidArgument(std::string(what) + " grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) throw InvalidArgument(std::string(what) + " grid must be strictly ascending");
    }
}

struct Bracket {
    std::size_t lo = 0;
    std::size_t hi = 0;
    double w = 0.0;  // weight of hi
};

// x is in coordinates already transformed (log frequency for the frequency axis).
Bracket bracket(const std::vector<double>& nodes, double x, const char* axis, double shown) {
    const double lo_edge = nodes.front();
    const double hi_edge = nodes.back();
    const double slack = kHullSlack * std::max(1.0, std::abs(hi_edge));
    if (!(x >= lo_edge - slack && x <= hi_edge + slack)) {
        throw OutOfRange(std::string(axis) + " " + detail::format_sig(shown, 8) + " outside database range");
    }
    if (nodes.size() == 1) return {0, 0, 0.0};
    x = std::clamp(x, lo_edge, hi_edge);
    auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    std::size_t hi = static_cast<std::size_t>(it - nodes.begin());
    if (hi == nodes.size()) hi = nodes.size() - 1;
    const std::size_t lo = hi - 1;
    if (x == nodes[lo]) return {lo, hi, 0.0};
    if (x == nodes[hi]) return {lo, hi, 1.0};
    return {lo, hi, (x - nodes[lo]) / (nodes[hi] - nodes[lo])};
}

double mix(double a, double b, double w) {
    if (w == 0.0) return a;
    if (w == 1.0) return b;
    return a * (1.0 - w) + b * w;
}

}  // namespace

RLDatabase::RLDatabase(std::vector<MaterialParams> materials, std::vector<double> freqs_ghz,
                       std::vector<double> angles_deg, std::vector<double> values, double kappa,
                       std::string build_stamp)
    : materials_(std::move(materials)),
      freqs_(std::move(freqs_ghz)),
      angles_(std::move(angles_deg)),
      values_(std::move(values)),
      kappa_(kappa),
      build_stamp_(std::move(build_stamp)) {
    if (materials_.empty()) throw InvalidArgument("database needs at least one material");
    for (std::size_t i = 0; i < materials_.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (materials_[i].name == materials_[j].name) {
                throw InvalidArgument("duplicate material '" + materials_[i].name + "'");
            }
        }
    }
    require_ascending(freqs_, "frequency");
    require_ascending(angles_, "angle");
    if (!(freqs_.front() > 0.0)) throw InvalidArgument("frequencies must be positive");
    if (values_.size() != materials_.size() * freqs_.size() * angles_.size()) {
        throw InvalidArgument("database value count does not match grid shape");
    }
    for (double v : values_) {
        if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("reflection loss values must be finite and >= 0");
    }
}

std::size_t RLDatabase::material_index(std::string_view name) const {
    for (std::size_t i = 0; i < materials_.size(); ++i) {
        if (materials_[i].name == name) return i;
    }
    throw InvalidArgument("material '" + std::string(name) + "' not in database");
}

bool RLDatabase::has_material(std::string_view name) const {
    return std::any_of(materials_.begin(), materials_.end(), [&](const auto& m) { return m.name == name; });
}

double RLDatabase::lookup(std::string_view material, double f_ghz, double theta_deg) const {
    const std::size_t m = material_index(material);
    if (!(f_ghz > 0.0)) throw OutOfRange("frequency must be positive");

    Bracket fb;
    if (freqs_.size() == 1) {
        fb = bracket(freqs_, f_ghz, "frequency", f_ghz);
    } else {
        std::vector<double> log_nodes(freqs_.size());
        std::transform(freqs_.begin(), freqs_.end(), log_nodes.begin(), [](double f) { return std::log(f); });
        // Snap onto nodes exactly so node lookups never pick up log round-off.
        auto exact = std::find(freqs_.begin(), freqs_.end(), f_ghz);
        fb = bracket(log_nodes, exact != freqs_.end() ? log_nodes[exact - freqs_.begin()] : std::log(f_ghz),
                     "frequency", f_ghz);
    }
    const Bracket ab = bracket(angles_, theta_deg, "angle", theta_deg);

    const double lo = mix(at(m, fb.lo, ab.lo), at(m, fb.lo, ab.hi), ab.w);
    const double hi = mix(at(m, fb.hi, ab.lo), at(m, fb.hi, ab.hi), ab.w);
    return mix(lo, hi, fb.w);
}

std::vector<double> default_angle_grid() {
    std::vector<double> grid;
    for (int a = 0; a <= 85; ++a) grid.push_back(a);
    return grid;
}

RLDatabase build_rl_database(std::span<const MaterialParams> materials, std::span<const double> freqs_ghz,
                             std::span<const double> angles_deg, double kappa, std::string build_stamp) {
    for (double a : angles_deg) {
        if (!(a >= 0.0 && a <= 89.0)) throw InvalidArgument("database angles must lie within [0, 89] degrees");
    }
    std::vector<double> values;
    values.reserve(materials.size() * freqs_ghz.size() * angles_deg.size());
    for (const auto& m : materials) {
        for (double f : freqs_ghz) {
            for (double a : angles_deg) values.push_back(reflection_loss(m, f, a * kPi / 180.0, kappa));
        }
    }
    return RLDatabase({materials.begin(), materials.end()}, {freqs_ghz.begin(), freqs_ghz.end()},
                      {angles_deg.begin(), angles_deg.end()}, std::move(values), kappa, std::move(build_stamp));
}

void save_rl_database(const RLDatabase& db, std::ostream& out) {
    out << "#version=" << kRLDatabaseVersion << '\n';
    out << "#kappa=" << detail::format_shortest(db.kappa()) << '\n';
    for (const auto& m : db.materials()) {
        out << "#material=" << m.name << ',' << detail::format_shortest(m.a) << ',' << detail::format_shortest(m.b)
            << ',' << detail::format_shortest(m.c) << ',' << detail::format_shortest(m.d) << ','
            << detail::format_shortest(m.roughness_sigma) << '\n';
    }
    if (!db.build_stamp().empty()) out << "#built=" << db.build_stamp() << '\n';
    out << "material,f_ghz,angle_deg,rl_db\n";
    for (std::size_t m = 0; m < db.materials().size(); ++m) {
        for (std::size_t f = 0; f < db.freqs().size(); ++f) {
            for (std::size_t a = 0; a < db.angles_deg().size(); ++a) {
                out << db.materials()[m].name << ',' << detail::format_sig(db.freqs()[f], 6) << ','
                    << detail::format_sig(db.angles_deg()[a], 6) << ',' << detail::format_sig(db.at(m, f, a), 6)
                    << '\n';
            }
        }
    }
}

void save_rl_database(const RLDatabase& db, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write '" + path + "'");
    save_rl_database(db, out);
    if (!out) throw InvalidArgument("write to '" + path + "' failed");
}

RLDatabase load_rl_database(std::istream& in, const std::string& source) {
    std::optional<int> version;
    std::optional<double> kappa;
    std::string stamp;
    std::vector<MaterialParams> declared;
    struct Row {
        std::string material;
        double f, angle, rl;
        std::size_t line;
    };
    std::vector<Row> rows;

    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto line = detail::trim(raw);
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) continue;
            const auto key = line.substr(1, eq - 1);
            const auto val = line.substr(eq + 1);
            if (key == "version") {
                auto v = detail::parse_double(val);
                if (!v) throw ParseError(source, lineno, "bad version field");
                version = static_cast<int>(*v);
                if (*version != kRLDatabaseVersion) {
                    throw VersionError(source + ": unsupported RL database version " + std::string(val) +
                                       " (expected " + std::to_string(kRLDatabaseVersion) + ")");
                }
            } else if (key == "kappa") {
                kappa = detail::parse_double(val);
                if (!kappa) throw ParseError(source, lineno, "bad kappa field");
            } else if (key == "material") {
                auto f = detail::split(val, ',');
                if (f.size() != 6) throw ParseError(source, lineno, "material header needs 6 fields");
                MaterialParams m;
                m.name = std::string(detail::trim(f[0]));
                double* slots[] = {&m.a, &m.b, &m.c, &m.d, &m.roughness_sigma};
                for (std::size_t i = 0; i < 5; ++i) {
                    auto v = detail::parse_double(f[i + 1]);
                    if (!v) throw ParseError(source, lineno, "bad material constant");
                    *slots[i] = *v;
                }
                declared.push_back(std::move(m));
            } else if (key == "built") {
                stamp = std::string(val);
            }
            continue;
        }
        if (!version) throw ParseError(source, lineno, "missing #version header");
        if (line == "material,f_ghz,angle_deg,rl_db") continue;
        const auto f = detail::split(line, ',');
        if (f.size() != 4) throw ParseError(source, lineno, "expected 4 fields, got " + std::to_string(f.size()));
        const auto fv = detail::parse_double(f[1]);
        const auto av = detail::parse_double(f[2]);
        const auto rv = detail::parse_double(f[3]);
        if (!fv || !av || !rv) throw ParseError(source, lineno, "bad numeric field");
        rows.push_back({std::string(detail::trim(f[0])), *fv, *av, *rv, lineno});
    }
    if (!version) throw ParseError(source, lineno, "missing #version header");
    if (!kappa) throw ParseError(source, lineno, "missing #kappa header");
    if (rows.empty()) throw ParseError(source, lineno, "no data rows");

    std::vector<std::string> names;
    std::vector<double> freqs, angles;
    for (const auto& r : rows) {
        if (std::find(names.begin(), names.end(), r.material) == names.end()) names.push_back(r.material);
        freqs.push_back(r.f);
        angles.push_back(r.angle);
    }
    for (auto* grid : {&freqs, &angles}) {
        std::sort(grid->begin(), grid->end());
        grid->erase(std::unique(grid->begin(), grid->end()), grid->end());
    }

    std::vector<MaterialParams> materials;
    for (const auto& n : names) {
        auto it = std::find_if(declared.begin(), declared.end(), [&](const auto& m) { return m.name == n; });
        materials.push_back(it != declared.end() ? *it : MaterialParams{n});
    }

    const std::size_t expected = names.size() * freqs.size() * angles.size();
    if (rows.size() != expected) {
        throw ParseError(source, rows.back().line,
                         "incomplete grid: expected " + std::to_string(expected) + " rows, got " +
                             std::to_string(rows.size()));
    }
    std::vector<double> values(expected, 0.0);
    std::vector<bool> seen(expected, false);
    for (const auto& r : rows) {
        const auto mi = static_cast<std::size_t>(std::find(names.begin(), names.end(), r.material) - names.begin());
        const auto fi = static_cast<std::size_t>(std::lower_bound(freqs.begin(), freqs.end(), r.f) - freqs.begin());
        const auto ai =
            static_cast<std::size_t>(std::lower_bound(angles.begin(), angles.end(), r.angle) - angles.begin());
        const std::size_t idx = (mi * freqs.size() + fi) * angles.size() + ai;
        if (seen[idx]) throw ParseError(source, r.line, "duplicate grid cell");
        seen[idx] = true;
        values[idx] = r.rl;
    }
    try {
        return RLDatabase(std::move(materials), std::move(freqs), std::move(angles), std::move(values), *kappa,
                          std::move(stamp));
    } catch (const InvalidArgument& e) {
        throw ParseError(source, lineno, e.what());
    }
}

RLDatabase load_rl_database(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open RL database '" + path + "'");
    return load_rl_database(in, path);
}

}  // namespace matid
