#pragma once

#include <array>
#include <complex>

#include "nrpl/physical_params.hpp"

namespace nrpl {

using cplx = std::complex<double>;

/// (a1, a2, b): optomechanical cavity field, spinning cavity field, phonon amplitude.
using ModeState = std::array<cplx, 3>;

/// Mean-field equations of motion in the frame rotating at the laser frequency:
///   a1' = (i Delta_L - gamma1) a1 + i g (b + b*) a1 - i J a2 + eps_L
///   a2' = [i (Delta_L + Delta_sag) - gamma2] a2 - i J a1
///   b'  = -(i omega_m + gamma_m) b + i g |a1|^2
class CoupledModeEquations {
public:
    CoupledModeEquations(const DeviceParams& p, const DriveContext& d)
        : CoupledModeEquations(p, d, cplx(d.drive_amplitude, 0.0)) {}

    /// Same equations with an explicit complex drive (phase studies); the
    /// amplitude stored in `d` is ignored.
    CoupledModeEquations(const DeviceParams& p, const DriveContext& d, cplx drive)
        : a1_rate_(-p.gamma1, d.detuning),
          a2_rate_(-p.gamma2, d.detuning + d.sagnac_shift),
          b_rate_(-p.gamma_m(), -p.omega_m()),
          g_(p.g),
          j_(p.J()),
          eps_(drive) {}

    ModeState operator()(double /*t*/, const ModeState& y) const noexcept {
        constexpr cplx i{0.0, 1.0};
        const cplx& a1 = y[0];
        const cplx& a2 = y[1];
        const cplx& b = y[2];
        const double x = 2.0 * b.real();  // b + b*
        return {
            a1_rate_ * a1 + i * (g_ * x) * a1 - i * j_ * a2 + eps_,
            a2_rate_ * a2 - i * j_ * a1,
            b_rate_ * b + i * (g_ * std::norm(a1)),
        };
    }

private:
    cplx a1_rate_;
    cplx a2_rate_;
    cplx b_rate_;
    double g_;
    double j_;
    cplx eps_;
};

}  // namespace nrpl
