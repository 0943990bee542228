// SPDX-License-Identifier: Apache-2.0
#include "matid/em_core.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "matid/error.hpp"
#include "text_util.hpp"

namespace matid {

namespace {

constexpr double kNumericSlackDb = 1e-9;

void require_frequency(double f_ghz) {
    if (!(f_ghz > 0.0) || !std::isfinite(f_ghz)) {
        throw InvalidArgument("frequency must be positive, got " + std::to_string(f_ghz) + " GHz");
    }
}

void require_angle(double theta_i) {
    if (!(theta_i >= 0.0 && theta_i < kPi / 2)) {
        throw InvalidArgument("incident angle must lie in [0, pi/2), got " + std::to_string(theta_i) + " rad");
    }
}

}  // namespace

MaterialParams wood() { return {"wood", 1.99, 0.0, 0.0047, 1.0718, 0.4e-3}; }
MaterialParams plaster() { return {"plaster", 2.94, 0.0, 0.0116, 0.7076, 0.2e-3}; }
MaterialParams glass() { return {"glass", 6.27, 0.0, 0.0043, 1.1925, 0.0}; }

std::vector<MaterialParams> builtin_materials() { return {wood(), plaster(), glass()}; }

void validate(const MaterialParams& mat) {
    if (mat.name.empty()) throw InvalidArgument("material name is empty");
    if (!(mat.a > 0.0)) throw InvalidArgument("material '" + mat.name + "': a must be positive");
    if (!(mat.roughness_sigma >= 0.0)) {
        throw InvalidArgument("material '" + mat.name + "': roughness sigma must be non-negative");
    }
    for (double v : {mat.a, mat.b, mat.c, mat.d, mat.roughness_sigma}) {
        if (!std::isfinite(v)) throw InvalidArgument("material '" + mat.name + "': non-finite constant");
    }
}

const MaterialParams& find_material(std::span<const MaterialParams> palette, std::string_view name) {
    for (const auto& m : palette) {
        if (m.name == name) return m;
    }
    throw InvalidArgument("unknown material '" + std::string(name) + "'");
}

std::vector<MaterialParams> parse_materials(std::istream& in, const std::string& source) {
    std::vector<MaterialParams> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view body = line;
        body = detail::trim(body.substr(0, body.find('#')));
        if (body.empty()) continue;
        auto fields = detail::split(body, ',');
        if (fields.size() != 6) {
            throw ParseError(source, lineno, "expected 6 fields (name, a, b, c, d, sigma_m), got " +
                                                 std::to_string(fields.size()));
        }
        MaterialParams m;
        m.name = std::string(detail::trim(fields[0]));
        double* slots[] = {&m.a, &m.b, &m.c, &m.d, &m.roughness_sigma};
        for (std::size_t i = 0; i < 5; ++i) {
            auto v = detail::parse_double(fields[i + 1]);
            if (!v) throw ParseError(source, lineno, "bad number '" + std::string(fields[i + 1]) + "'");
            *slots[i] = *v;
        }
        try {
            validate(m);
        } catch (const InvalidArgument& e) {
            throw ParseError(source, lineno, e.what());
        }
        for (const auto& prev : out) {
            if (prev.name == m.name) throw ParseError(source, lineno, "duplicate material '" + m.name + "'");
        }
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<MaterialParams> load_materials(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open material table '" + path + "'");
    return parse_materials(in, path);
}

void write_materials(std::ostream& out, std::span<const MaterialParams> materials) {
    out << "# name, a, b, c, d, sigma_m\n";
    for (const auto& m : materials) {
        out << m.name << ", " << detail::format_shortest(m.a) << ", " << detail::format_shortest(m.b) << ", "
            << detail::format_shortest(m.c) << ", " << detail::format_shortest(m.d) << ", "
            << detail::format_shortest(m.roughness_sigma) << '\n';
    }
}

ComplexPermittivity relative_permittivity(const MaterialParams& mat, double f_ghz) {
    require_frequency(f_ghz);
    const double real_part = mat.a * std::pow(f_ghz, mat.b);
    const double conductivity = mat.c * std::pow(f_ghz, mat.d);  // S/m
    return {real_part, 17.98 * conductivity / f_ghz};
}

std::complex<double> normal_wavenumber_ratio(ComplexPermittivity eta, double theta_i) {
    const double s = std::sin(theta_i);
    auto root = std::sqrt(eta.value() - s * s);
    if (root.real() < 0.0) root = -root;
    return root;
}

ComplexReflection fresnel_thick(ComplexPermittivity eta, double theta_i) {
    require_angle(theta_i);
    const auto e = eta.value();
    const auto root = normal_wavenumber_ratio(eta, theta_i);
    const double c = std::cos(theta_i);
    return {(c - root) / (c + root), (e * c - root) / (e * c + root)};
}

ComplexReflection slab_coefficient(ComplexPermittivity eta, double theta_i, double h_m, double f_ghz) {
    if (!(h_m >= 0.0)) throw InvalidArgument("slab thickness must be non-negative");
    require_frequency(f_ghz);
    const auto thick = fresnel_thick(eta, theta_i);
    if (h_m == 0.0) return {0.0, 0.0};

    const double k0 = 2.0 * kPi * f_ghz * 1e9 / kSpeedOfLight;
    const auto q = k0 * h_m * normal_wavenumber_ratio(eta, theta_i);
    const auto round_trip = std::exp(std::complex<double>(0.0, -2.0) * q);

    auto combine = [&](std::complex<double> r) { return r * (1.0 - round_trip) / (1.0 - r * r * round_trip); };
    return {combine(thick.te), combine(thick.tm)};
}

double wavelength(double f_ghz) {
    require_frequency(f_ghz);
    return kSpeedOfLight / (f_ghz * 1e9);
}

double roughness_factor(double sigma_m, double theta_i, double f_ghz, double kappa) {
    if (!(kappa >= 0.0)) throw InvalidArgument("roughness kappa must be non-negative");
    if (kappa == 0.0 || sigma_m == 0.0) return 1.0;
    const double x = sigma_m * std::cos(theta_i) / wavelength(f_ghz);
    return std::exp(-kappa * x * x);
}

double amplitude_db(std::complex<double> r) {
    const double mag = std::abs(r);
    if (mag == 0.0) return -std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(mag);
}

double power_db(const ComplexReflection& r, Polarization pol) {
    double power = 0.0;
    switch (pol) {
        case Polarization::TE: power = std::norm(r.te); break;
        case Polarization::TM: power = std::norm(r.tm); break;
        case Polarization::Unpolarized: power = 0.5 * (std::norm(r.te) + std::norm(r.tm)); break;
    }
    if (power == 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(power);
}

double reflection_loss(const MaterialParams& mat, double f_ghz, double theta_i, double roughness_kappa,
                       Polarization pol) {
    validate(mat);
    const auto r = fresnel_thick(relative_permittivity(mat, f_ghz), theta_i);
    const double rho = roughness_factor(mat.roughness_sigma, theta_i, f_ghz, roughness_kappa);
    return -power_db(r, pol) - 20.0 * std::log10(rho);
}

double fspl(double f_ghz, double d_m) {
    require_frequency(f_ghz);
    if (!(d_m > 0.0) || !std::isfinite(d_m)) throw InvalidArgument("path length must be positive");
    return 32.4 + 20.0 * std::log10(f_ghz) + 20.0 * std::log10(d_m);
}

LinkBudget extract_total_rl(double p_tx_dbm, double p_rx_dbm, double f_ghz, double d_m) {
    LinkBudget lb;
    lb.p_tx = p_tx_dbm;
    lb.p_rx = p_rx_dbm;
    lb.f = f_ghz;
    lb.d = d_m;
    lb.pl = p_tx_dbm - p_rx_dbm;
    lb.fspl = fspl(f_ghz, d_m);
    lb.rl_total = lb.pl - lb.fspl;
    if (lb.rl_total < -kNumericSlackDb) {
        std::ostringstream msg;
        msg << "received power " << p_rx_dbm << " dBm exceeds the free-space bound "
            << (p_tx_dbm - lb.fspl) << " dBm";
        throw InconsistentMeasurement(msg.str());
    }
    if (lb.rl_total < 0.0) lb.rl_total = 0.0;
    return lb;
}

}  // namespace matid
