#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <utility>

#include "nrpl/coupled_modes.hpp"
#include "nrpl/errors.hpp"
#include "nrpl/physical_params.hpp"

namespace nrpl {

struct SolverSettings {
    double tolerance = 1e-12;   // relative, on the displacement fixed point
    int max_iterations = 10000;
    double relaxation = 0.5;    // in (0, 1]
    bool detect_multistability = true;
};

struct SteadyState {
    cplx a1{};
    cplx a2{};
    cplx b{};
    double x_s = 0.0;              // 2 x0 Re(b) [m]
    double photon_number_1 = 0.0;  // |a1|^2
    int iterations = 0;
    double residual_norm = 0.0;    // |rhs of the equations of motion| / eps_L
};

inline void validate(const SolverSettings& s) {
    if (!std::isfinite(s.tolerance) || !(s.tolerance > 0.0)) {
        throw ValidationError("tolerance", "must be finite and positive");
    }
    if (s.max_iterations < 1) {
        throw ValidationError("max_iterations", "must be at least 1");
    }
    if (!(s.relaxation > 0.0 && s.relaxation <= 1.0)) {
        throw ValidationError("relaxation", "must lie in (0, 1]");
    }
}

namespace detail {

/// Closed-form steady state for a prescribed static displacement x.
class SteadyStateMap {
public:
    SteadyStateMap(const DeviceParams& p, const DriveContext& d)
        : p_(p),
          eps_(d.drive_amplitude),
          detuning_(d.detuning),
          spin_detuning_(d.detuning + d.sagnac_shift),
          // J^2 / [gamma2 - i (Delta_L + Delta_sag)] is independent of x.
          loading_(p.J() * p.J() / cplx(p.gamma2, -spin_detuning_)),
          spring_(constants::hbar * p.zeta /
                  (p.raw.effective_mass * (p.omega_m() * p.omega_m() +
                                           p.gamma_m() * p.gamma_m()))) {}

    cplx a1(double x) const {
        return eps_ / (cplx(p_.gamma1, -(detuning_ + p_.zeta * x)) + loading_);
    }

    cplx a2(const cplx& a1) const { return p_.J() * a1 / cplx(spin_detuning_, p_.gamma2); }

    cplx b(const cplx& a1) const {
        return p_.g * std::norm(a1) / cplx(p_.omega_m(), -p_.gamma_m());
    }

    /// Radiation-pressure displacement hbar zeta |a1(x)|^2 / m (omega_m^2 + gamma_m^2).
    double force_displacement(double x) const { return spring_ * std::norm(a1(x)); }

private:
    const DeviceParams& p_;
    double eps_;
    double detuning_;
    double spin_detuning_;
    cplx loading_;
    double spring_;
};

struct FixedPoint {
    double x = 0.0;
    int iterations = 0;
    bool converged = false;
    double last_step = 0.0;  // relative |F(x) - x|
};

inline FixedPoint iterate_displacement(const SteadyStateMap& map, double seed,
                                       const SolverSettings& s) {
    const double r = s.relaxation;
    FixedPoint fp{seed, 0, false, 0.0};
    for (int it = 1; it <= s.max_iterations; ++it) {
        const double target = map.force_displacement(fp.x);
        if (!std::isfinite(target)) {
            fp.iterations = it;
            fp.last_step = target;
            return fp;
        }
        const double mismatch = std::abs(target - fp.x);
        const double scale = std::max(std::abs(target), std::abs(fp.x));
        fp.last_step = scale > 0.0 ? mismatch / scale : 0.0;
        fp.iterations = it;
        if (mismatch <= s.tolerance * scale) {
            fp.x = target;
            fp.converged = true;
            return fp;
        }
        fp.x = (1.0 - r) * fp.x + r * target;
    }
    return fp;
}

}  // namespace detail

/// Norm of the equations-of-motion right-hand side at `state`, divided by eps_L
/// (or the raw norm when the drive vanishes).
inline double steady_residual(const SteadyState& state, const DeviceParams& p,
                              const DriveContext& d) {
    const ModeState rhs = CoupledModeEquations(p, d)(0.0, {state.a1, state.a2, state.b});
    const double norm = std::sqrt(std::norm(rhs[0]) + std::norm(rhs[1]) + std::norm(rhs[2]));
    return d.drive_amplitude > 0.0 ? norm / d.drive_amplitude : norm;
}

/// Self-consistent steady state of the coupled-mode equations.
///
/// The static displacement x_s enters a1 through the detuning zeta x_s, and
/// x_s is itself set by |a1|^2. A damped fixed-point iteration on x_s starting
/// from x_s = 0 selects the branch continuously connected to the undriven
/// solution. Afterwards a seed scan over [0, 100 x_s] checks that the map has
/// a single attractor; otherwise MultistableError is thrown.
inline SteadyState solve_steady(const DeviceParams& p, const DriveContext& d,
                                const SolverSettings& s = {}) {
    validate(s);
    const detail::SteadyStateMap map(p, d);
    const detail::FixedPoint fp = detail::iterate_displacement(map, 0.0, s);
    if (!fp.converged) {
        throw SolverError("steady state: displacement iteration did not converge after " +
                              std::to_string(fp.iterations) + " iterations",
                          fp.last_step, fp.iterations);
    }

    if (s.detect_multistability && fp.x != 0.0) {
        constexpr int kSeeds = 16;
        for (int k = 0; k < kSeeds; ++k) {
            const double seed =
                k == 0 ? 0.0 : fp.x * std::pow(10.0, -2.0 + 4.0 * (k - 1) / (kSeeds - 2));
            const detail::FixedPoint other = detail::iterate_displacement(map, seed, s);
            if (!other.converged) continue;
            if (std::abs(other.x - fp.x) > 100.0 * s.tolerance * std::abs(fp.x)) {
                throw MultistableError(
                    "steady state: multiple fixed points of the displacement map (x_s = " +
                        std::to_string(fp.x) + " m and " + std::to_string(other.x) + " m)",
                    fp.x, other.x);
            }
        }
    }

    SteadyState st;
    st.a1 = map.a1(fp.x);
    st.a2 = map.a2(st.a1);
    st.b = map.b(st.a1);
    st.x_s = 2.0 * p.x0 * st.b.real();
    st.photon_number_1 = std::norm(st.a1);
    st.iterations = fp.iterations;
    st.residual_norm = steady_residual(st, p, d);
    return st;
}

/// |m (omega_m^2 + gamma_m^2) x_s - hbar zeta |a1|^2| / (hbar zeta |a1|^2).
inline double force_balance_residual(const SteadyState& st, const DeviceParams& p) {
    const double spring = p.raw.effective_mass *
                          (p.omega_m() * p.omega_m() + p.gamma_m() * p.gamma_m()) * st.x_s;
    const double radiation = constants::hbar * p.zeta * std::norm(st.a1);
    const double diff = std::abs(spring - radiation);
    if (radiation == 0.0) {
        return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return diff / radiation;
}

struct DisplacementRatio {
    double eta_gt = 1.0;  // x_s(Delta_sag > 0) / x_s(Omega = 0)
    double eta_lt = 1.0;  // x_s(Delta_sag < 0) / x_s(Omega = 0)
};

/// Displacement amplification for the two spin/drive orientations relative to
/// the stationary resonator. The three contexts must share pump and detuning.
inline DisplacementRatio displacement_ratio(const DeviceParams& p,
                                            const DriveContext& positive_shift,
                                            const DriveContext& negative_shift,
                                            const DriveContext& stationary,
                                            const SolverSettings& s = {}) {
    for (const DriveContext* d : {&positive_shift, &negative_shift}) {
        if (d->pump_power != stationary.pump_power || d->detuning != stationary.detuning) {
            throw ValidationError("drive", "contexts must differ only in spin and direction");
        }
    }
    if (positive_shift.sagnac_shift < 0.0) {
        throw ValidationError("positive_shift", "Delta_sag must be non-negative");
    }
    if (negative_shift.sagnac_shift > 0.0) {
        throw ValidationError("negative_shift", "Delta_sag must be non-positive");
    }
    if (stationary.sagnac_shift != 0.0) {
        throw ValidationError("stationary", "reference must have Delta_sag = 0");
    }
    const double x_ref = solve_steady(p, stationary, s).x_s;
    if (x_ref == 0.0) {
        throw DomainError("x_s(Omega=0) != 0",
                          "displacement ratio undefined: stationary displacement is zero");
    }
    return {solve_steady(p, positive_shift, s).x_s / x_ref,
            solve_steady(p, negative_shift, s).x_s / x_ref};
}

}  // namespace nrpl
