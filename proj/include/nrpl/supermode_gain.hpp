#pragma once

// Supermode picture of the phonon laser: the optical supermodes
// a_pm = (a1 +- a2)/sqrt(2) split by 2J act as a two-level system whose
// transitions are mediated by phonons. The Sagnac shift couples the
// supermodes directly and reshapes the population inversion.

#include <cmath>
#include <complex>
#include <numbers>
#include <utility>

#include "nrpl/errors.hpp"
#include "nrpl/physical_params.hpp"
#include "nrpl/steady_state.hpp"

namespace nrpl {

/// Which closed form of the supermode population inversion feeds G0.
enum class InversionModel {
    exact,        // full expression with beta, Re(b), Im(b)
    approximate,  // 2J |eps|^2 (Delta_L + Delta_sag) / (beta0^2 + 4 gamma^2 Delta_L^2)
};

/// Where the mechanical amplitude inside beta and the inversion comes from.
enum class MechanicalSource {
    steady_state,  // b and n_b = |b|^2 from solve_steady at the same point
    zero,          // b = 0, appropriate at threshold where |b_s|^2 << 1
};

struct GainOptions {
    InversionModel inversion = InversionModel::exact;
    MechanicalSource mechanical = MechanicalSource::steady_state;
    SolverSettings solver{};
};

struct OperatingPoint {
    DeviceParams params;
    DriveContext drive;
    double phonon_occupation = 0.0;  // n_b
    cplx mech_amplitude{};           // b
};

struct GainBreakdown {
    double omega_plus = 0.0;
    double omega_minus = 0.0;
    double beta0 = 0.0;
    double beta = 0.0;
    double dn_exact = 0.0;
    double dn_approx = 0.0;
    double G0 = 0.0;
    double G_sag = 0.0;
    double G = 0.0;
    double omega_prime = 0.0;
    cplx drive_term_D{};
    double gamma_eff = 0.0;
    double N_b = 0.0;
};

inline OperatingPoint make_operating_point(const DeviceParams& p, const DriveContext& d,
                                           MechanicalSource source,
                                           const SolverSettings& s = {}) {
    OperatingPoint op{p, d, 0.0, {}};
    if (source == MechanicalSource::steady_state) {
        const SteadyState st = solve_steady(p, d, s);
        op.mech_amplitude = st.b;
        op.phonon_occupation = std::norm(st.b);
    }
    return op;
}

inline std::pair<double, double> supermode_frequencies(const DeviceParams& p,
                                                       const DriveContext& d) {
    const double center = -d.detuning - 0.5 * d.sagnac_shift;
    return {center + p.J(), center - p.J()};
}

/// Stimulated phonon number exp(2 (G - gamma_m) / gamma_m).
inline double phonon_number(double G, double gamma_m) {
    if (!(gamma_m > 0.0)) {
        throw ValidationError("gamma_m", "must be positive");
    }
    return std::exp(2.0 * (G - gamma_m) / gamma_m);
}

namespace detail {

struct InversionTerms {
    double beta0;
    double beta;
    double lorentz;  // beta^2 + gamma^2 (2 Delta_L + Delta_sag)^2
    double exact;
    double approx;
};

inline InversionTerms inversion_terms(const OperatingPoint& op) {
    const DeviceParams& p = op.params;
    const double dl = op.drive.detuning;
    const double ds = op.drive.sagnac_shift;
    const double eps2 = op.drive.drive_amplitude * op.drive.drive_amplitude;
    const double j = p.J();
    const double gam = p.gamma;
    const double g = p.g;
    const double re_b = op.mech_amplitude.real();
    const double im_b = op.mech_amplitude.imag();

    InversionTerms t{};
    t.beta0 = j * j + gam * gam - dl * dl + 0.25 * g * g * op.phonon_occupation;
    t.beta = t.beta0 - ds * (dl + 0.5 * g * re_b);
    const double sum = 2.0 * dl + ds;
    t.lorentz = t.beta * t.beta + gam * gam * sum * sum;
    t.exact = eps2 * (2.0 * j * (dl + ds) - gam * g * im_b - j * g * re_b) / t.lorentz;
    t.approx = 2.0 * j * eps2 * (dl + ds) / (t.beta0 * t.beta0 + 4.0 * gam * gam * dl * dl);
    return t;
}

}  // namespace detail

/// Population inversion of the optical supermodes: (exact, approximate).
inline std::pair<double, double> population_inversion(const OperatingPoint& op) {
    const auto t = detail::inversion_terms(op);
    return {t.exact, t.approx};
}

/// Mechanical gain G = G0 + G_sag together with the frequency shift and drive
/// term of the effective mechanical equation b' = (-i omega_m - i omega' + G - gamma_m) b + D.
inline GainBreakdown mechanical_gain(const OperatingPoint& op,
                                     InversionModel model = InversionModel::exact) {
    const DeviceParams& p = op.params;
    const double dl = op.drive.detuning;
    const double ds = op.drive.sagnac_shift;
    const double eps2 = op.drive.drive_amplitude * op.drive.drive_amplitude;
    const double gam = p.gamma;
    const double j = p.J();
    const double g2 = p.g * p.g;
    const double mismatch = 2.0 * j - p.omega_m();  // 2J - omega_m
    const double sum = 2.0 * dl + ds;
    const double resonance = mismatch * mismatch + 4.0 * gam * gam;

    const auto t = detail::inversion_terms(op);
    const double dn = model == InversionModel::exact ? t.exact : t.approx;

    GainBreakdown out;
    std::tie(out.omega_plus, out.omega_minus) = supermode_frequencies(p, op.drive);
    out.beta0 = t.beta0;
    out.beta = t.beta;
    out.dn_exact = t.exact;
    out.dn_approx = t.approx;

    out.G0 = g2 * gam * dn / (2.0 * resonance);
    out.G_sag = eps2 * g2 * (p.omega_m() - 2.0 * j) * sum * gam / (4.0 * t.lorentz * resonance);
    out.G = out.G0 + out.G_sag;

    out.omega_prime = g2 * mismatch * dn / (4.0 * resonance) +
                      g2 * eps2 * gam * gam * sum / (2.0 * resonance * t.lorentz);

    constexpr cplx i{0.0, 1.0};
    const double zx0 = p.g;
    const cplx d_den = 2.0 * i * mismatch + 4.0 * gam;  // 2i(2J - omega_m) + 4 gamma
    out.drive_term_D = zx0 * ds * dn / (2.0 * d_den) +
                       i * zx0 * t.beta * cplx(gam, -j) * eps2 / (d_den * t.lorentz) +
                       i * zx0 * gam * eps2 * sum * (dl + ds) / (d_den * t.lorentz);

    out.gamma_eff = p.gamma_m() - out.G;
    out.N_b = phonon_number(out.G, p.gamma_m());
    return out;
}

inline GainBreakdown mechanical_gain(const DeviceParams& p, const DriveContext& d,
                                     const GainOptions& opt = {}) {
    return mechanical_gain(make_operating_point(p, d, opt.mechanical, opt.solver),
                           opt.inversion);
}

struct ThresholdResult {
    double power = 0.0;         // P_th [W]
    double gain_mismatch = 0.0; // |G(P_th) - gamma_m| / gamma_m with b = 0
    bool consistent = false;    // gain_mismatch <= 0.05
};

/// Closed-form threshold pump power
///   P_th = 2 hbar gamma gamma_m omega_c [M + gamma^2 (2 Delta_L + Delta_sag)^2]
///          / [gamma1 J g^2 (Delta_L + Delta_sag)],
///   M = (J^2 + gamma^2 - Delta_L^2 - Delta_sag Delta_L)^2,
/// derived for 2J = omega_m with b = 0. The pump power of `drive_shape` is ignored.
/// Throws DomainError when Delta_L + Delta_sag <= 0: no finite threshold exists.
inline ThresholdResult threshold_power(const DeviceParams& p, const DriveContext& drive_shape) {
    const double dl = drive_shape.detuning;
    const double ds = drive_shape.sagnac_shift;
    if (!(dl + ds > 0.0)) {
        throw DomainError("delta_L+delta_sag>0",
                          "threshold power requires Delta_L + Delta_sag > 0");
    }
    if (!(p.J() > 0.0)) {
        throw DomainError("J>0", "threshold power requires coupled resonators (J > 0)");
    }
    const double gam = p.gamma;
    const double j = p.J();
    const double beta = j * j + gam * gam - dl * dl - ds * dl;
    const double sum = 2.0 * dl + ds;
    const double numerator = 2.0 * constants::hbar * gam * p.gamma_m() * p.omega_c() *
                             (beta * beta + gam * gam * sum * sum);
    const double denominator = p.gamma1 * j * p.g * p.g * (dl + ds);

    ThresholdResult r;
    r.power = numerator / denominator;
    const OperatingPoint op{p, with_pump(drive_shape, r.power, p), 0.0, {}};
    const GainBreakdown gb = mechanical_gain(op, InversionModel::exact);
    r.gain_mismatch = p.gamma_m() > 0.0 ? std::abs(gb.G - p.gamma_m()) / p.gamma_m() : 0.0;
    r.consistent = r.gain_mismatch <= 0.05;
    return r;
}

/// Isolation R = 10 log10[N_b(+|Omega|) / N_b(-|Omega|)] in dB at the drive
/// direction of `drive`. Equivalent to comparing left and right drive at fixed spin.
inline double isolation(const DeviceParams& p, const DriveContext& drive, double spin_speed,
                        const GainOptions& opt = {}) {
    const double omega = std::abs(spin_speed);
    const auto gain_at = [&](double spin) {
        const DriveContext d = make_drive(p, drive.pump_power, drive.detuning, drive.direction, spin);
        return mechanical_gain(p, d, opt).G;
    };
    const double gm = p.gamma_m();
    if (!(gm > 0.0)) {
        throw ValidationError("gamma_m", "must be positive");
    }
    // 10 log10(exp(u) / exp(v)) = 10 log10(e) (u - v); subtracting the
    // exponents keeps the result antisymmetric and avoids overflow.
    const double log_plus = 2.0 * (gain_at(omega) - gm) / gm;
    const double log_minus = 2.0 * (gain_at(-omega) - gm) / gm;
    return 10.0 * std::numbers::log10e * (log_plus - log_minus);
}

}  // namespace nrpl
