// SPDX-License-Identifier: Apache-2.0
#include "matid/settling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <ostream>

#include "matid/error.hpp"
#include "text_util.hpp"

namespace matid {

namespace {

constexpr double kDbPerNeper = 8.685889638065037;  // 20 log10(e)

std::string format_db(double v) {
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    return detail::format_sig(v, 10);
}

}  // namespace

double default_grid_step(double f_ghz) {
    if (!(f_ghz > 0.0)) throw InvalidArgument("frequency must be positive");
    return 1e-5 * (1000.0 / f_ghz);
}

double round_trip_decay_length(const MaterialParams& mat, double f_ghz, double theta_i) {
    const auto eta = relative_permittivity(mat, f_ghz);
    const double k0 = 2.0 * kPi * f_ghz * 1e9 / kSpeedOfLight;
    const double loss = -normal_wavenumber_ratio(eta, theta_i).imag();
    if (!(loss > 0.0)) return std::numeric_limits<double>::infinity();
    return 1.0 / (2.0 * k0 * loss);
}

double default_h_max(const MaterialParams& mat, double f_ghz, double theta_i, double tol_db) {
    const double decay = round_trip_decay_length(mat, f_ghz, theta_i);
    if (!std::isfinite(decay)) {
        throw NotSettled("material '" + mat.name + "' is lossless; the slab coefficient never settles");
    }
    const auto r = fresnel_thick(relative_permittivity(mat, f_ghz), theta_i);
    const double contrast = std::max(std::abs(1.0 - r.te * r.te), std::abs(1.0 - r.tm * r.tm));
    const double ripple_ratio = kDbPerNeper * contrast / tol_db;
    const double estimate = decay * std::max(1.0, std::log(std::max(ripple_ratio, 1.0)));
    return 4.0 * estimate;
}

double slab_deviation_db(const MaterialParams& mat, double f_ghz, double theta_i, double h_m, Polarization pol) {
    const auto eta = relative_permittivity(mat, f_ghz);
    const double thick = power_db(fresnel_thick(eta, theta_i), pol);
    const double slab = power_db(slab_coefficient(eta, theta_i, h_m, f_ghz), pol);
    return std::abs(slab - thick);
}

double settling_thickness(const SettlingQuery& q) {
    validate(q.material);
    if (!(q.tol_db > 0.0)) throw InvalidArgument("tolerance must be positive");
    const double step = q.grid_step > 0.0 ? q.grid_step : default_grid_step(q.f_ghz);
    const double h_max = q.h_max > 0.0 ? q.h_max : default_h_max(q.material, q.f_ghz, q.theta_i, q.tol_db);
    if (q.grid_step < 0.0 || q.h_max < 0.0 || !(step < h_max)) {
        throw InvalidArgument("degenerate thickness grid: need 0 < step < h_max");
    }

    const auto eta = relative_permittivity(q.material, q.f_ghz);
    const double thick = power_db(fresnel_thick(eta, q.theta_i), q.pol);
    const auto n = static_cast<std::size_t>(std::floor(h_max / step + 1e-9));

    // Index of the last grid point outside the band; 0 means none.
    std::size_t last_bad = 0;
    for (std::size_t k = 1; k <= n; ++k) {
        const double h = static_cast<double>(k) * step;
        const double dev = std::abs(power_db(slab_coefficient(eta, q.theta_i, h, q.f_ghz), q.pol) - thick);
        if (dev > q.tol_db) last_bad = k;
    }
    if (last_bad > 0 && static_cast<double>(last_bad) * step >= 0.5 * h_max) {
        throw NotSettled("slab coefficient of '" + q.material.name + "' leaves the " +
                         detail::format_sig(q.tol_db, 6) + " dB band at h = " +
                         detail::format_sig(static_cast<double>(last_bad) * step, 6) + " m, above h_max/2");
    }
    return static_cast<double>(last_bad + 1) * step;
}

std::vector<SweepPoint> thickness_sweep(const MaterialParams& mat, double f_ghz, double theta_i,
                                        std::span<const double> h_grid) {
    if (h_grid.empty()) throw InvalidArgument("thickness grid is empty");
    for (std::size_t i = 1; i < h_grid.size(); ++i) {
        if (!(h_grid[i] > h_grid[i - 1])) throw InvalidArgument("thickness grid must be strictly ascending");
    }
    const auto eta = relative_permittivity(mat, f_ghz);
    std::vector<SweepPoint> out;
    out.reserve(h_grid.size());
    for (double h : h_grid) {
        const auto r = slab_coefficient(eta, theta_i, h, f_ghz);
        out.push_back({h, amplitude_db(r.te), amplitude_db(r.tm)});
    }
    return out;
}

std::vector<SettlingRow> settling_table(std::span<const MaterialParams> materials, std::span<const double> freqs_ghz,
                                        double theta_i, double tol_db) {
    std::vector<SettlingRow> rows;
    for (const auto& m : materials) {
        for (double f : freqs_ghz) {
            SettlingQuery q{m, f, theta_i, tol_db};
            rows.push_back({m.name, f, theta_i * 180.0 / kPi, tol_db, settling_thickness(q)});
        }
    }
    return rows;
}

std::map<std::string, double, std::less<>> settling_by_material(std::span<const MaterialParams> materials,
                                                                double f_ghz, double tol_db, double theta_i) {
    std::map<std::string, double, std::less<>> out;
    for (const auto& m : materials) out[m.name] = settling_thickness({m, f_ghz, theta_i, tol_db});
    return out;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepPoint> sweep) {
    out << "h_m,te_db,tm_db\n";
    for (const auto& p : sweep) {
        out << detail::format_sig(p.h_m, 10) << ',' << format_db(p.te_db) << ',' << format_db(p.tm_db) << '\n';
    }
}

void write_settling_csv(std::ostream& out, std::span<const SettlingRow> rows) {
    out << "material,f_ghz,theta_deg,tol_db,h_m\n";
    for (const auto& r : rows) {
        out << r.material << ',' << detail::format_sig(r.f_ghz, 10) << ',' << detail::format_sig(r.theta_deg, 10)
            << ',' << detail::format_sig(r.tol_db, 10) << ',' << detail::format_sig(r.h_m, 10) << '\n';
    }
}

}  // namespace matid
