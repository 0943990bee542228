// SPDX-License-Identifier: Apache-2.0
//
// Gridded reflection-loss database over (material, frequency, incident angle).
//
#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "matid/em_core.hpp"

namespace matid {

inline constexpr int kRLDatabaseVersion = 1;

class RLDatabase {
public:
    RLDatabase() = default;

    /// values are laid out material-major, then frequency, then angle.
    RLDatabase(std::vector<MaterialParams> materials, std::vector<double> freqs_ghz, std::vector<double> angles_deg,
               std::vector<double> values, double kappa, std::string build_stamp = {});

    const std::vector<MaterialParams>& materials() const { return materials_; }
    const std::vector<double>& freqs() const { return freqs_; }
    const std::vector<double>& angles_deg() const { return angles_; }
    const std::vector<double>& values() const { return values_; }
    double kappa() const { return kappa_; }
    const std::string& build_stamp() const { return build_stamp_; }

    std::size_t material_index(std::string_view name) const;
    bool has_material(std::string_view name) const;

    double at(std::size_t material, std::size_t freq, std::size_t angle) const {
        return values_[(material * freqs_.size() + freq) * angles_.size() + angle];
    }

    /// Bilinear interpolation in (log f, angle); exact at grid nodes.
    /// Throws OutOfRange outside the grid hull.
    double lookup(std::string_view material, double f_ghz, double theta_deg) const;

    friend bool operator==(const RLDatabase&, const RLDatabase&) = default;

private:
    std::vector<MaterialParams> materials_;
    std::vector<double> freqs_;
    std::vector<double> angles_;
    std::vector<double> values_;
    double kappa_ = 0.0;
    std::string build_stamp_;
};

/// 0 to 85 degrees in 1 degree steps.
std::vector<double> default_angle_grid();

/// Every cell is reflection_loss() at the grid point.
RLDatabase build_rl_database(std::span<const MaterialParams> materials, std::span<const double> freqs_ghz,
                             std::span<const double> angles_deg, double kappa, std::string build_stamp = {});

// Text format:
//   #version=1
//   #kappa=<float>
//   #material=<name>,<a>,<b>,<c>,<d>,<sigma_m>     (one per material)
//   #built=<stamp>                                  (optional)
//   material,f_ghz,angle_deg,rl_db
//   <rows, 6 significant digits>
void save_rl_database(const RLDatabase& db, std::ostream& out);
void save_rl_database(const RLDatabase& db, const std::string& path);
RLDatabase load_rl_database(std::istream& in, const std::string& source = "<stream>");
RLDatabase load_rl_database(const std::string& path);

}  // namespace matid
