// SPDX-License-Identifier: Apache-2.0
//
// Settling thickness: the smallest slab thickness from which the slab
// reflection coefficient stays within a dB band around the thick-slab value.
//
#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <span>
#include <vector>

#include "matid/em_core.hpp"

namespace matid {

struct SettlingQuery {
    MaterialParams material;
    double f_ghz = 100.0;
    double theta_i = 0.0;      // rad
    double tol_db = 0.2;
    double h_max = 0.0;        // m, 0 selects default_h_max()
    double grid_step = 0.0;    // m, 0 selects default_grid_step()
    Polarization pol = Polarization::Unpolarized;
};

/// 0.01 mm at 1 THz, scaled inversely with frequency.
double default_grid_step(double f_ghz);

/// 1/e length of the internal round-trip term exp(-2jq), in m.
double round_trip_decay_length(const MaterialParams& mat, double f_ghz, double theta_i);

/// Four times the thickness at which the first-order ripple estimate
/// 20 log10(e) |1 - r^2| exp(-h / decay_length) falls to tol_db.
double default_h_max(const MaterialParams& mat, double f_ghz, double theta_i, double tol_db);

/// | dB(r'(h)) - dB(r(inf)) | for the query's polarization.
double slab_deviation_db(const MaterialParams& mat, double f_ghz, double theta_i, double h_m,
                         Polarization pol = Polarization::Unpolarized);

/// Smallest grid thickness h* such that every grid point in [h*, h_max] lies
/// inside the band. Grid points are k * step for k = 1, 2, ... up to h_max.
/// Throws NotSettled if the band is violated anywhere in [h_max / 2, h_max].
double settling_thickness(const SettlingQuery& q);

struct SweepPoint {
    double h_m = 0.0;
    double te_db = 0.0;  // -inf marks "no reflection" (h == 0)
    double tm_db = 0.0;
};

std::vector<SweepPoint> thickness_sweep(const MaterialParams& mat, double f_ghz, double theta_i,
                                        std::span<const double> h_grid);

struct SettlingRow {
    std::string material;
    double f_ghz = 0.0;
    double theta_deg = 0.0;
    double tol_db = 0.0;
    double h_m = 0.0;
};

/// One row per (material, frequency), default grid and ceiling.
std::vector<SettlingRow> settling_table(std::span<const MaterialParams> materials, std::span<const double> freqs_ghz,
                                        double theta_i, double tol_db);

/// Settling thickness per material name at one frequency, for scene checks.
std::map<std::string, double, std::less<>> settling_by_material(std::span<const MaterialParams> materials,
                                                                double f_ghz, double tol_db = 0.2,
                                                                double theta_i = 0.0);

/// Columns h_m, te_db, tm_db; "-inf" for the zero-thickness entry.
void write_sweep_csv(std::ostream& out, std::span<const SweepPoint> sweep);
/// Columns material, f_ghz, theta_deg, tol_db, h_m.
void write_settling_csv(std::ostream& out, std::span<const SettlingRow> rows);

}  // namespace matid
