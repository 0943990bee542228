// SPDX-License-Identifier: Apache-2.0
//
// matid command-line front end. Units at this boundary: frequency GHz,
// angles degrees, slab thickness mm, positions m.
//
#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "matid/em_core.hpp"
#include "matid/error.hpp"
#include "matid/identify.hpp"
#include "matid/rl_db.hpp"
#include "matid/scene.hpp"
#include "matid/settling.hpp"
#include "text_util.hpp"

namespace matid::cli {

namespace {

constexpr const char* kOutputDirEnv = "MATID_OUTPUT_DIR";

struct Common {
    std::string materials_path;
    std::string out_path;
};

// Writes to the named file (resolved against $MATID_OUTPUT_DIR when relative) or to the fallback stream.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) {
        if (path.empty() || path == "-") {
            stream_ = &fallback;
            return;
        }
        std::filesystem::path p(path);
        if (p.is_relative()) {
            if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) p = std::filesystem::path(dir) / p;
        }
        file_ = std::make_unique<std::ofstream>(p);
        if (!*file_) throw InvalidArgument("cannot write '" + p.string() + "'");
        stream_ = file_.get();
    }
    std::ostream& operator*() { return *stream_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_ = nullptr;
};

std::vector<MaterialParams> palette_from(const Common& c) {
    return c.materials_path.empty() ? builtin_materials() : load_materials(c.materials_path);
}

std::vector<MaterialParams> select_materials(const std::vector<MaterialParams>& palette,
                                             const std::vector<std::string>& names) {
    if (names.empty() || (names.size() == 1 && names[0] == "all")) return palette;
    std::vector<MaterialParams> out;
    for (const auto& n : names) out.push_back(find_material(palette, n));
    return out;
}

Vec3 parse_point(const std::string& text) {
    const auto parts = detail::split(text, ',');
    if (parts.size() != 3) throw InvalidArgument("expected x,y,z but got '" + text + "'");
    double v[3];
    for (int i = 0; i < 3; ++i) {
        auto d = detail::parse_double(parts[i]);
        if (!d) throw InvalidArgument("bad coordinate in '" + text + "'");
        v[i] = *d;
    }
    return {v[0], v[1], v[2]};
}

std::vector<Vec3> parse_points(const std::vector<std::string>& texts, const std::vector<Vec3>& fallback,
                               const char* what) {
    std::vector<Vec3> out;
    for (const auto& t : texts) out.push_back(parse_point(t));
    if (out.empty()) out = fallback;
    if (out.empty()) throw InvalidArgument(std::string("no ") + what + " positions given and none in the scene");
    return out;
}

Polarization parse_pol(const std::string& s) {
    if (s == "te") return Polarization::TE;
    if (s == "tm") return Polarization::TM;
    if (s == "unpolarized") return Polarization::Unpolarized;
    throw InvalidArgument("polarization must be te, tm or unpolarized");
}

std::string fmt(double v, int digits = 6) { return detail::format_sig(v, digits); }

void meta(std::ostream& os, const std::string& key, const std::string& value) { os << '#' << key << '=' << value << '\n'; }

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        const auto parts = detail::split(text, ':');
        if (parts.size() != 3) throw InvalidArgument("grid must be start:stop:step, got '" + text + "'");
        const auto start = detail::parse_double(parts[0]);
        const auto stop = detail::parse_double(parts[1]);
        const auto step = detail::parse_double(parts[2]);
        if (!start || !stop || !step) throw InvalidArgument("bad number in grid '" + text + "'");
        if (!(*step > 0.0) || *stop < *start) throw InvalidArgument("grid needs step > 0 and stop >= start");
        const auto n = static_cast<long>(std::floor((*stop - *start) / *step + 1e-9));
        for (long i = 0; i <= n; ++i) {
            // Round to the step's decimal resolution so 0.1-style steps print cleanly.
            const double v = *start + static_cast<double>(i) * *step;
            out.push_back(std::round(v * 1e9) / 1e9);
        }
        return out;
    }
    for (const auto& part : detail::split(text, ',')) {
        auto v = detail::parse_double(part);
        if (!v) throw InvalidArgument("bad number '" + std::string(part) + "'");
        out.push_back(*v);
    }
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Reflection-loss modelling and map-assisted material identification", "matid"};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_option("--materials", common.materials_path, "Material table (name, a, b, c, d, sigma_m per line)");
    app.add_option("-o,--out", common.out_path, "Output file (relative paths go under $MATID_OUTPUT_DIR)");

    // coeff
    auto* coeff = app.add_subcommand("coeff", "Slab reflection coefficient vs thickness (TE/TM, dB)");
    std::string coeff_material = "glass";
    double coeff_freq = 100.0, coeff_angle = 0.0;
    std::string coeff_thickness = "0:50:0.1";
    coeff->add_option("--material", coeff_material)->required();
    coeff->add_option("--freq", coeff_freq, "GHz")->required();
    coeff->add_option("--angle", coeff_angle, "Incident angle, degrees");
    coeff->add_option("--thickness", coeff_thickness, "Thickness grid in mm (start:stop:step)");

    // rl
    auto* rl = app.add_subcommand("rl", "Reflection loss vs incident angle");
    std::vector<std::string> rl_materials;
    std::string rl_freqs = "100", rl_angles = "0:80:10", rl_pol = "unpolarized";
    double rl_kappa = 0.0;
    rl->add_option("--material", rl_materials, "Material name(s) or 'all'")->delimiter(',');
    rl->add_option("--freq", rl_freqs, "GHz, grid or list");
    rl->add_option("--angles", rl_angles, "Degrees, start:stop:step");
    rl->add_option("--kappa", rl_kappa, "Roughness constant (0 disables)");
    rl->add_option("--pol", rl_pol, "te, tm or unpolarized");

    // settling
    auto* settling = app.add_subcommand("settling", "Settling thickness table");
    std::vector<std::string> st_materials;
    std::string st_freqs = "28,100,1000";
    double st_tol = 0.2, st_angle = 0.0, st_step_mm = 0.0, st_hmax_mm = 0.0;
    std::string st_pol = "unpolarized";
    settling->add_option("--material", st_materials, "Material name(s) or 'all'")->delimiter(',');
    settling->add_option("--freq", st_freqs, "GHz, list or grid");
    settling->add_option("--tol", st_tol, "Band half-width, dB");
    settling->add_option("--angle", st_angle, "Incident angle, degrees");
    settling->add_option("--step", st_step_mm, "Thickness grid step, mm (default scales with frequency)");
    settling->add_option("--hmax", st_hmax_mm, "Search ceiling, mm (default from the decay length)");
    settling->add_option("--pol", st_pol, "te, tm or unpolarized");

    // rldb build|show
    auto* rldb = app.add_subcommand("rldb", "Reflection-loss database");
    rldb->require_subcommand(1);
    auto* rldb_build = rldb->add_subcommand("build", "Build and save a database");
    std::string db_freqs = "28,100,300,1000", db_angles = "0:85:1", db_stamp;
    double db_kappa = 0.0;
    rldb_build->add_option("--freqs", db_freqs, "GHz grid");
    rldb_build->add_option("--angles", db_angles, "Degree grid");
    rldb_build->add_option("--kappa", db_kappa, "Roughness constant");
    rldb_build->add_option("--stamp", db_stamp, "Free-form build stamp stored in the header");
    auto* rldb_show = rldb->add_subcommand("show", "Print or query a saved database");
    std::string show_path, show_material;
    std::optional<double> show_freq, show_angle;
    rldb_show->add_option("--db", show_path)->required()->check(CLI::ExistingFile);
    rldb_show->add_option("--material", show_material);
    rldb_show->add_option("--freq", show_freq, "GHz");
    rldb_show->add_option("--angle", show_angle, "Degrees (interpolated)");

    // trace
    auto* tr = app.add_subcommand("trace", "List specular trajectories");
    std::string tr_scene;
    std::vector<std::string> tr_tx, tr_rx;
    int tr_bounces = 2;
    tr->add_option("--scene", tr_scene)->required()->check(CLI::ExistingFile);
    tr->add_option("--tx", tr_tx, "x,y,z (repeatable; default: scene transmitters)");
    tr->add_option("--rx", tr_rx, "x,y,z (repeatable; default: scene receivers)");
    tr->add_option("--max-bounces", tr_bounces)->check(CLI::Range(1, kMaxBounces));

    // check-settling
    auto* chk = app.add_subcommand("check-settling", "Compare facet thickness with settling thickness");
    std::string chk_scene;
    double chk_freq = 100.0, chk_tol = 0.2;
    chk->add_option("--scene", chk_scene)->required()->check(CLI::ExistingFile);
    chk->add_option("--freq", chk_freq, "GHz");
    chk->add_option("--tol", chk_tol, "dB");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Simulated total-RL measurements from scene labels");
    std::string sim_scene;
    std::vector<std::string> sim_tx, sim_rx;
    int sim_bounces = 2;
    double sim_freq = 100.0, sim_ptx = 30.0, sim_noise = 0.0, sim_u = 1.0, sim_kappa = 0.0;
    std::uint64_t sim_seed = 1;
    sim->add_option("--scene", sim_scene)->required()->check(CLI::ExistingFile);
    sim->add_option("--tx", sim_tx);
    sim->add_option("--rx", sim_rx);
    sim->add_option("--max-bounces", sim_bounces)->check(CLI::Range(1, kMaxBounces));
    sim->add_option("--freq", sim_freq, "GHz");
    sim->add_option("--ptx", sim_ptx, "Transmit power, dBm");
    sim->add_option("--noise", sim_noise, "Gaussian noise sigma, dB");
    sim->add_option("--seed", sim_seed);
    sim->add_option("--u", sim_u, "Uncertainty recorded with each measurement, dB");
    sim->add_option("--kappa", sim_kappa, "Roughness constant used for the truth");

    // identify
    auto* idf = app.add_subcommand("identify", "Identify facet materials from measured total RL");
    std::string id_scene, id_meas, id_db;
    std::vector<std::string> id_tx, id_rx;
    int id_bounces = 2;
    double id_freq = 100.0, id_delta = 0.01, id_kappa = 0.0;
    std::optional<double> id_u;
    bool id_all = false;
    idf->add_option("--scene", id_scene)->required()->check(CLI::ExistingFile);
    idf->add_option("--measurements", id_meas)->required()->check(CLI::ExistingFile);
    idf->add_option("--u", id_u, "Uncertainty, dB (overrides the per-row value)");
    idf->add_option("--db", id_db, "Saved RL database (default: built for --freq)")->check(CLI::ExistingFile);
    idf->add_option("--tx", id_tx);
    idf->add_option("--rx", id_rx);
    idf->add_option("--max-bounces", id_bounces)->check(CLI::Range(1, kMaxBounces));
    idf->add_option("--freq", id_freq, "GHz");
    idf->add_option("--delta", id_delta, "RP matching tolerance, m");
    idf->add_option("--kappa", id_kappa, "Roughness constant for the database built on the fly");
    idf->add_flag("--all-positions", id_all, "Do not stop once every covered RP is resolved");

    std::vector<const char*> argv{"matid"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitInvalid;
    }

    try {
        const auto palette = palette_from(common);

        if (*coeff) {
            const auto& mat = find_material(palette, coeff_material);
            auto grid = parse_grid(coeff_thickness);
            for (auto& h : grid) h *= 1e-3;
            const auto sweep = thickness_sweep(mat, coeff_freq, deg2rad(coeff_angle), grid);
            Sink sink(common.out_path, out);
            meta(*sink, "material", mat.name);
            meta(*sink, "f_ghz", fmt(coeff_freq, 10));
            meta(*sink, "theta_deg", fmt(coeff_angle, 10));
            const auto thick = fresnel_thick(relative_permittivity(mat, coeff_freq), deg2rad(coeff_angle));
            meta(*sink, "te_thick_db", fmt(amplitude_db(thick.te), 10));
            meta(*sink, "tm_thick_db", fmt(amplitude_db(thick.tm), 10));
            write_sweep_csv(*sink, sweep);
        } else if (*rl) {
            const auto mats = select_materials(palette, rl_materials);
            const auto freqs = parse_grid(rl_freqs);
            const auto angles = parse_grid(rl_angles);
            const auto pol = parse_pol(rl_pol);
            Sink sink(common.out_path, out);
            meta(*sink, "kappa", fmt(rl_kappa, 10));
            meta(*sink, "pol", rl_pol);
            *sink << "material,f_ghz,angle_deg,rl_db\n";
            for (const auto& m : mats) {
                for (double f : freqs) {
                    for (double a : angles) {
                        *sink << m.name << ',' << fmt(f) << ',' << fmt(a) << ','
                              << fmt(reflection_loss(m, f, deg2rad(a), rl_kappa, pol)) << '\n';
                    }
                }
            }
        } else if (*settling) {
            const auto mats = select_materials(palette, st_materials);
            const auto freqs = parse_grid(st_freqs);
            const auto pol = parse_pol(st_pol);
            std::vector<SettlingRow> rows;
            for (const auto& m : mats) {
                for (double f : freqs) {
                    SettlingQuery q{m, f, deg2rad(st_angle), st_tol, st_hmax_mm * 1e-3, st_step_mm * 1e-3, pol};
                    rows.push_back({m.name, f, st_angle, st_tol, settling_thickness(q)});
                }
            }
            Sink sink(common.out_path, out);
            meta(*sink, "pol", st_pol);
            write_settling_csv(*sink, rows);
        } else if (*rldb_build) {
            const auto db = build_rl_database(palette, parse_grid(db_freqs), parse_grid(db_angles), db_kappa, db_stamp);
            Sink sink(common.out_path, out);
            save_rl_database(db, *sink);
        } else if (*rldb_show) {
            const auto db = load_rl_database(show_path);
            Sink sink(common.out_path, out);
            if (show_angle) {
                if (show_material.empty() || !show_freq) throw InvalidArgument("--angle needs --material and --freq");
                *sink << "material,f_ghz,angle_deg,rl_db\n"
                      << show_material << ',' << fmt(*show_freq) << ',' << fmt(*show_angle) << ','
                      << fmt(db.lookup(show_material, *show_freq, *show_angle)) << '\n';
            } else {
                meta(*sink, "kappa", detail::format_shortest(db.kappa()));
                *sink << "material,f_ghz,angle_deg,rl_db\n";
                for (std::size_t m = 0; m < db.materials().size(); ++m) {
                    if (!show_material.empty() && db.materials()[m].name != show_material) continue;
                    for (std::size_t f = 0; f < db.freqs().size(); ++f) {
                        if (show_freq && db.freqs()[f] != *show_freq) continue;
                        for (std::size_t a = 0; a < db.angles_deg().size(); ++a) {
                            *sink << db.materials()[m].name << ',' << fmt(db.freqs()[f]) << ','
                                  << fmt(db.angles_deg()[a]) << ',' << fmt(db.at(m, f, a)) << '\n';
                        }
                    }
                }
            }
        } else if (*tr) {
            const auto scene = load_scene(tr_scene);
            const auto txs = parse_points(tr_tx, scene.transmitters(), "TX");
            const auto rxs = parse_points(tr_rx, scene.receivers(), "RX");
            Sink sink(common.out_path, out);
            meta(*sink, "scene", tr_scene);
            *sink << "trajectory_id,bounces,total_length_m,hop,facet_id,x,y,z,theta_deg\n";
            for (std::size_t i = 0; i < txs.size(); ++i) {
                for (std::size_t j = 0; j < rxs.size(); ++j) {
                    for (const auto& t : trace(scene, txs[i], rxs[j], tr_bounces)) {
                        const auto id = trajectory_id(i, j, t);
                        for (std::size_t h = 0; h < t.hops.size(); ++h) {
                            const auto& hop = t.hops[h];
                            *sink << id << ',' << t.bounces() << ',' << detail::format_fixed(t.total_length, 6) << ','
                                  << h + 1 << ',' << hop.facet_id << ',' << detail::format_fixed(hop.rp.x, 6) << ','
                                  << detail::format_fixed(hop.rp.y, 6) << ',' << detail::format_fixed(hop.rp.z, 6)
                                  << ',' << detail::format_fixed(rad2deg(hop.theta_i), 4) << '\n';
                        }
                    }
                }
            }
        } else if (*chk) {
            const auto scene = load_scene(chk_scene);
            const auto table = settling_by_material(palette, chk_freq, chk_tol);
            Sink sink(common.out_path, out);
            meta(*sink, "f_ghz", fmt(chk_freq, 10));
            meta(*sink, "tol_db", fmt(chk_tol, 10));
            *sink << "facet_id,material,thickness_m,settling_m,status\n";
            for (const auto& c : check_settling(scene, table)) {
                *sink << c.facet_id << ',' << scene.facet(c.facet_id).material << ',' << fmt(c.thickness_m, 10)
                      << ',' << fmt(c.required_m, 10) << ',' << to_string(c.status) << '\n';
            }
        } else if (*sim) {
            const auto scene = load_scene(sim_scene);
            const auto txs = parse_points(sim_tx, scene.transmitters(), "TX");
            const auto rxs = parse_points(sim_rx, scene.receivers(), "RX");
            const auto truth = ground_truth_from_scene(scene);
            std::vector<MeasurementRecord> records;
            std::uint64_t draw = 0;
            for (std::size_t i = 0; i < txs.size(); ++i) {
                for (std::size_t j = 0; j < rxs.size(); ++j) {
                    for (const auto& t : trace(scene, txs[i], rxs[j], sim_bounces)) {
                        SimulationConfig cfg{sim_ptx, sim_freq, sim_noise, sim_seed + draw++, sim_kappa, sim_u};
                        records.push_back(simulate_measurement(scene, t, trajectory_id(i, j, t), truth, palette, cfg));
                    }
                }
            }
            Sink sink(common.out_path, out);
            meta(*sink, "f_ghz", fmt(sim_freq, 10));
            meta(*sink, "noise_sigma_db", fmt(sim_noise, 10));
            meta(*sink, "seed", std::to_string(sim_seed));
            write_measurements(*sink, records);
        } else if (*idf) {
            const auto scene = load_scene(id_scene);
            const auto txs = parse_points(id_tx, scene.transmitters(), "TX");
            const auto rxs = parse_points(id_rx, scene.receivers(), "RX");
            const auto records = load_measurements(id_meas);
            const auto db = id_db.empty()
                                ? build_rl_database(palette, std::vector<double>{id_freq}, default_angle_grid(), id_kappa)
                                : load_rl_database(id_db);
            IdentifyConfig cfg;
            cfg.f_ghz = id_freq;
            cfg.u_db = id_u.value_or(1.0);
            cfg.use_record_uncertainty = !id_u.has_value();
            cfg.max_bounces = id_bounces;
            cfg.rp_delta = id_delta;
            cfg.stop_when_resolved = !id_all;
            const auto report = identify_loop(scene, txs, rxs, palette, db, cfg, measurements_from(records));
            Sink sink(common.out_path, out);
            write_identify_report(*sink, report, cfg);
            if (report.has_contradiction() || !report.no_hypothesis.empty()) {
                for (const auto& c : report.belief.contradictions) err << "contradiction: " << c.message << '\n';
                for (const auto& id : report.no_hypothesis) err << "no hypothesis matches trajectory " << id << '\n';
                return kExitUnresolved;
            }
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
    return kExitOk;
}

}  // namespace matid::cli
