// SPDX-License-Identifier: Apache-2.0
//
// Permittivity, Fresnel and thin-slab reflection coefficients, reflection loss
// and link-budget arithmetic for building materials between 28 GHz and 1 THz.
//
// Unit conventions used throughout:
//   frequency  GHz
//   length     m
//   angle      rad (incident angle measured from the surface normal)
//   losses     positive dB
//
#pragma once

#include <complex>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "matid/constants.hpp"

namespace matid {

/// Roughness constant obtained by least-squares fitting the wood and plaster
/// rows of the 100 GHz reference RL table (see tests/test_em_core.cpp).
inline constexpr double kFittedRoughnessKappa = 7.087;

/// ITU-style material constants: eta = a f^b - j 17.98 c f^d / f.
struct MaterialParams {
    std::string name;
    double a = 1.0;
    double b = 0.0;
    double c = 0.0;
    double d = 0.0;
    double roughness_sigma = 0.0;  // m

    friend bool operator==(const MaterialParams&, const MaterialParams&) = default;
};

MaterialParams wood();
MaterialParams plaster();
MaterialParams glass();

/// wood, plaster, glass in that order.
std::vector<MaterialParams> builtin_materials();

/// Throws InvalidArgument unless a > 0 and roughness_sigma >= 0.
void validate(const MaterialParams& mat);

/// Throws InvalidArgument if no material of that name exists.
const MaterialParams& find_material(std::span<const MaterialParams> palette, std::string_view name);

/// Plain-text table, one material per line: `name, a, b, c, d, sigma_m`.
/// Blank lines and lines starting with '#' are ignored.
std::vector<MaterialParams> parse_materials(std::istream& in, const std::string& source = "<stream>");
std::vector<MaterialParams> load_materials(const std::string& path);
void write_materials(std::ostream& out, std::span<const MaterialParams> materials);

/// Stored as eta = real_part - j imag_part with imag_part >= 0.
struct ComplexPermittivity {
    double real_part = 1.0;
    double imag_part = 0.0;

    std::complex<double> value() const { return {real_part, -imag_part}; }
};

struct ComplexReflection {
    std::complex<double> te;
    std::complex<double> tm;
};

enum class Polarization { TE, TM, Unpolarized };

ComplexPermittivity relative_permittivity(const MaterialParams& mat, double f_ghz);

/// Reflection coefficients of a semi-infinite half space, incident from air.
ComplexReflection fresnel_thick(ComplexPermittivity eta, double theta_i);

/// Reflection coefficients of a slab of thickness h_m including the internal
/// multiple reflections. Exactly zero at h_m == 0, tends to fresnel_thick as h_m grows.
ComplexReflection slab_coefficient(ComplexPermittivity eta, double theta_i, double h_m, double f_ghz);

/// Principal square root of (eta - sin^2 theta) with non-negative real part.
std::complex<double> normal_wavenumber_ratio(ComplexPermittivity eta, double theta_i);

double wavelength(double f_ghz);

/// Specular attenuation of a rough surface, rho = exp(-kappa (sigma cos(theta) / lambda)^2).
double roughness_factor(double sigma_m, double theta_i, double f_ghz, double kappa);

/// 20 log10 |r|; -inf for r == 0.
double amplitude_db(std::complex<double> r);

/// 10 log10 of the reflected power fraction for the given polarization
/// (the mean of |r_te|^2 and |r_tm|^2 when unpolarized).
double power_db(const ComplexReflection& r, Polarization pol = Polarization::Unpolarized);

/// Reflection loss of one specular bounce off a thick surface, in positive dB.
double reflection_loss(const MaterialParams& mat, double f_ghz, double theta_i, double roughness_kappa = 0.0,
                       Polarization pol = Polarization::Unpolarized);

/// Free-space path loss, 32.4 + 20 log10(f) + 20 log10(d).
double fspl(double f_ghz, double d_m);

struct LinkBudget {
    double p_tx = 0.0;  // dBm
    double p_rx = 0.0;  // dBm
    double pl = 0.0;    // dB
    double fspl = 0.0;  // dB
    double rl_total = 0.0;  // dB
    double f = 0.0;     // GHz
    double d = 0.0;     // m
};

/// Splits a measured path loss into free-space and reflection parts.
/// Throws InconsistentMeasurement when the receiver sees more than free space allows.
LinkBudget extract_total_rl(double p_tx_dbm, double p_rx_dbm, double f_ghz, double d_m);

}  // namespace matid
