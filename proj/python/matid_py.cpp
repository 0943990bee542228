// SPDX-License-Identifier: Apache-2.0
#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "matid/em_core.hpp"
#include "matid/error.hpp"
#include "matid/identify.hpp"
#include "matid/rl_db.hpp"
#include "matid/scene.hpp"
#include "matid/settling.hpp"

namespace py = pybind11;
using namespace matid;

// Vec3 crosses the boundary as a 3-tuple of floats.
namespace pybind11::detail {
template <>
struct type_caster<Vec3> {
    PYBIND11_TYPE_CASTER(Vec3, const_name("tuple[float, float, float]"));

    bool load(handle src, bool) {
        if (!isinstance<sequence>(src)) return false;
        auto seq = reinterpret_borrow<sequence>(src);
        if (seq.size() != 3) return false;
        try {
            value = {seq[0].cast<double>(), seq[1].cast<double>(), seq[2].cast<double>()};
        } catch (const cast_error&) {
            return false;
        }
        return true;
    }

    static handle cast(const Vec3& v, return_value_policy, handle) {
        return py::make_tuple(v.x, v.y, v.z).release();
    }
};
}  // namespace pybind11::detail

namespace {

std::string report_csv(const IdentifyReport& report, const IdentifyConfig& config) {
    std::ostringstream out;
    write_identify_report(out, report, config);
    return out.str();
}

}  // namespace

PYBIND11_MODULE(_matid, m) {
    m.doc() = "Reflection-loss models, slab settling, ray tracing and material identification";

    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<OutOfRange>(m, "OutOfRange", PyExc_ValueError);
    py::register_exception<InconsistentMeasurement>(m, "InconsistentMeasurement", PyExc_RuntimeError);
    py::register_exception<NotSettled>(m, "NotSettled", PyExc_RuntimeError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<VersionError>(m, "VersionError", PyExc_ValueError);

    m.attr("FITTED_ROUGHNESS_KAPPA") = kFittedRoughnessKappa;

    py::enum_<Polarization>(m, "Polarization")
        .value("TE", Polarization::TE)
        .value("TM", Polarization::TM)
        .value("UNPOLARIZED", Polarization::Unpolarized);

    py::class_<MaterialParams>(m, "Material")
        .def(py::init([](std::string name, double a, double b, double c, double d, double sigma) {
                 MaterialParams p{std::move(name), a, b, c, d, sigma};
                 validate(p);
                 return p;
             }),
             py::arg("name"), py::arg("a"), py::arg("b"), py::arg("c"), py::arg("d"),
             py::arg("roughness_sigma") = 0.0)
        .def_readonly("name", &MaterialParams::name)
        .def_readonly("a", &MaterialParams::a)
        .def_readonly("b", &MaterialParams::b)
        .def_readonly("c", &MaterialParams::c)
        .def_readonly("d", &MaterialParams::d)
        .def_readonly("roughness_sigma", &MaterialParams::roughness_sigma)
        .def("__eq__", [](const MaterialParams& x, const MaterialParams& y) { return x == y; })
        .def("__repr__", [](const MaterialParams& p) { return "<Material " + p.name + ">"; });

    m.def("builtin_materials", &builtin_materials);
    m.def("load_materials", &load_materials, py::arg("path"));
    m.def("material", [](const std::string& name) { return find_material(builtin_materials(), name); },
          py::arg("name"));

    m.def("relative_permittivity",
          [](const MaterialParams& mat, double f) { return relative_permittivity(mat, f).value(); },
          py::arg("material"), py::arg("f_ghz"));
    m.def("fresnel",
          [](const MaterialParams& mat, double f, double theta) {
              auto r = fresnel_thick(relative_permittivity(mat, f), theta);
              return py::make_tuple(r.te, r.tm);
          },
          py::arg("material"), py::arg("f_ghz"), py::arg("theta_i"));
    m.def("slab_coefficient",
          [](const MaterialParams& mat, double f, double theta, double h) {
              auto r = slab_coefficient(relative_permittivity(mat, f), theta, h, f);
              return py::make_tuple(r.te, r.tm);
          },
          py::arg("material"), py::arg("f_ghz"), py::arg("theta_i"), py::arg("h_m"));
    m.def("reflection_loss", &reflection_loss, py::arg("material"), py::arg("f_ghz"), py::arg("theta_i"),
          py::arg("kappa") = 0.0, py::arg("pol") = Polarization::Unpolarized);
    m.def("fspl", &fspl, py::arg("f_ghz"), py::arg("d_m"));
    m.def("total_rl_from_power",
          [](double p_tx, double p_rx, double f, double d) { return extract_total_rl(p_tx, p_rx, f, d).rl_total; },
          py::arg("p_tx_dbm"), py::arg("p_rx_dbm"), py::arg("f_ghz"), py::arg("d_m"));

    m.def("settling_thickness",
          [](const MaterialParams& mat, double f, double theta, double tol, Polarization pol) {
              SettlingQuery q;
              q.material = mat;
              q.f_ghz = f;
              q.theta_i = theta;
              q.tol_db = tol;
              q.pol = pol;
              return settling_thickness(q);
          },
          py::arg("material"), py::arg("f_ghz"), py::arg("theta_i") = 0.0, py::arg("tol_db") = 0.2,
          py::arg("pol") = Polarization::Unpolarized);
    m.def("slab_deviation_db", &slab_deviation_db, py::arg("material"), py::arg("f_ghz"), py::arg("theta_i"),
          py::arg("h_m"), py::arg("pol") = Polarization::Unpolarized);
    m.def("thickness_sweep",
          [](const MaterialParams& mat, double f, double theta, const std::vector<double>& h) {
              std::vector<std::tuple<double, double, double>> rows;
              for (const auto& p : thickness_sweep(mat, f, theta, h)) rows.emplace_back(p.h_m, p.te_db, p.tm_db);
              return rows;
          },
          py::arg("material"), py::arg("f_ghz"), py::arg("theta_i"), py::arg("h_m"));

    py::class_<RLDatabase>(m, "RLDatabase")
        .def_property_readonly("freqs", &RLDatabase::freqs)
        .def_property_readonly("angles_deg", &RLDatabase::angles_deg)
        .def_property_readonly("kappa", &RLDatabase::kappa)
        .def_property_readonly("materials",
                               [](const RLDatabase& db) {
                                   std::vector<std::string> names;
                                   for (const auto& mat : db.materials()) names.push_back(mat.name);
                                   return names;
                               })
        .def("lookup", &RLDatabase::lookup, py::arg("material"), py::arg("f_ghz"), py::arg("theta_deg"))
        .def("save", py::overload_cast<const RLDatabase&, const std::string&>(&save_rl_database), py::arg("path"))
        .def("__eq__", [](const RLDatabase& x, const RLDatabase& y) { return x == y; });
    m.def("default_angle_grid", &default_angle_grid);
    m.def(
        "build_rl_database",
        [](const std::vector<MaterialParams>& mats, const std::vector<double>& freqs,
           std::optional<std::vector<double>> angles, double kappa) {
            const auto grid = angles ? *angles : default_angle_grid();
            return build_rl_database(mats, freqs, grid, kappa);
        },
        py::arg("materials"), py::arg("freqs_ghz"), py::arg("angles_deg") = py::none(), py::arg("kappa") = 0.0);
    m.def("load_rl_database", py::overload_cast<const std::string&>(&load_rl_database), py::arg("path"));

    py::class_<Hop>(m, "Hop")
        .def_readonly("rp", &Hop::rp)
        .def_readonly("facet_id", &Hop::facet_id)
        .def_readonly("theta_i", &Hop::theta_i);
    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("tx", &Trajectory::tx)
        .def_readonly("rx", &Trajectory::rx)
        .def_readonly("hops", &Trajectory::hops)
        .def_readonly("segment_lengths", &Trajectory::segment_lengths)
        .def_readonly("total_length", &Trajectory::total_length)
        .def_property_readonly("path_key", &Trajectory::path_key);

    py::class_<Scene>(m, "Scene")
        .def_property_readonly("facet_ids",
                               [](const Scene& s) {
                                   std::vector<std::string> ids;
                                   for (const auto& f : s.facets()) ids.push_back(f.id);
                                   return ids;
                               })
        .def_property_readonly("transmitters", &Scene::transmitters)
        .def_property_readonly("receivers", &Scene::receivers)
        .def("material_of", [](const Scene& s, std::string_view id) { return s.facet(id).material; })
        .def("thickness_of", [](const Scene& s, std::string_view id) { return s.facet(id).thickness; })
        .def("to_json", &scene_to_json)
        .def("__len__", &Scene::size);
    m.def("load_scene", &load_scene, py::arg("path"));
    m.def("parse_scene", [](const std::string& text) { return parse_scene_json(text); }, py::arg("text"));
    m.def("trace", &trace, py::arg("scene"), py::arg("tx"), py::arg("rx"), py::arg("max_bounces") = 2);
    m.def("trajectory_id", &trajectory_id, py::arg("tx_index"), py::arg("rx_index"), py::arg("trajectory"));

    py::class_<MeasurementRecord>(m, "Measurement")
        .def(py::init([](std::string id, double rl, double u) { return MeasurementRecord{std::move(id), rl, u}; }),
             py::arg("trajectory_id"), py::arg("measured_rl_db"), py::arg("u_db") = 1.0)
        .def_readonly("trajectory_id", &MeasurementRecord::trajectory_id)
        .def_readonly("measured_rl_db", &MeasurementRecord::measured_total_rl)
        .def_readonly("u_db", &MeasurementRecord::uncertainty_u);
    m.def("load_measurements", &load_measurements, py::arg("path"));

    m.def(
        "simulate",
        [](const Scene& scene, int max_bounces, double noise, std::uint64_t seed, double f, double u) {
            const auto palette = builtin_materials();
            const auto truth = ground_truth_from_scene(scene);
            SimulationConfig cfg;
            cfg.f_ghz = f;
            cfg.noise_sigma_db = noise;
            cfg.uncertainty_u = u;
            std::vector<MeasurementRecord> out;
            std::uint64_t draw = 0;
            for (std::size_t i = 0; i < scene.transmitters().size(); ++i) {
                for (std::size_t j = 0; j < scene.receivers().size(); ++j) {
                    for (const auto& t : trace(scene, scene.transmitters()[i], scene.receivers()[j], max_bounces)) {
                        if (t.hops.empty()) continue;
                        cfg.seed = seed + draw++;
                        out.push_back(simulate_measurement(scene, t, trajectory_id(i, j, t), truth, palette, cfg));
                    }
                }
            }
            return out;
        },
        py::arg("scene"), py::arg("max_bounces") = 2, py::arg("noise_sigma_db") = 0.0, py::arg("seed") = 0,
        py::arg("f_ghz") = 100.0, py::arg("u_db") = 1.0);

    m.def(
        "identify",
        [](const Scene& scene, const std::vector<MeasurementRecord>& records, double u, int max_bounces,
           double rp_delta, double f, std::optional<std::vector<MaterialParams>> materials) {
            const auto palette = materials ? *materials : builtin_materials();
            std::vector<double> freqs{f};
            const auto db = build_rl_database(palette, freqs, default_angle_grid(), 0.0);
            IdentifyConfig cfg;
            cfg.f_ghz = f;
            cfg.u_db = u;
            cfg.max_bounces = max_bounces;
            cfg.rp_delta = rp_delta;
            const auto report = identify_loop(scene, scene.transmitters(), scene.receivers(), palette, db, cfg,
                                              measurements_from(records));
            py::dict facets;
            for (const auto& fr : report.facets) {
                facets[py::str(fr.facet_id)] = py::make_tuple(std::string(to_string(fr.status)), fr.materials);
            }
            py::dict result;
            result["facets"] = facets;
            result["iterations"] = report.iterations;
            result["no_hypothesis"] = report.no_hypothesis;
            result["consistent"] = report.belief.consistent();
            result["csv"] = report_csv(report, cfg);
            return result;
        },
        py::arg("scene"), py::arg("measurements"), py::arg("u_db") = 1.0, py::arg("max_bounces") = 2,
        py::arg("rp_delta") = 0.01, py::arg("f_ghz") = 100.0, py::arg("materials") = py::none());
}
