#pragma once

#include <cmath>

#include "nrpl/config.hpp"
#include "nrpl/physical_params.hpp"

namespace nrpl::testing {

/// Device of the reference configuration: omega_c = c / lambda, gamma_m = 0.24e6 rad/s.
inline RawDeviceSpec literal_raw() { return reference_config().raw; }

/// Same device read with SI units throughout: omega_c = 2 pi c / lambda, gamma_m = 2 pi 0.24 MHz.
inline RawDeviceSpec si_raw() {
    RawDeviceSpec r = literal_raw();
    r.resonance = resonance_from_wavelength(1550e-9);
    r.mech_damping = constants::two_pi * 0.24e6;
    return r;
}

inline DeviceParams literal_device() { return derive_device(literal_raw()); }
inline DeviceParams si_device() { return derive_device(si_raw()); }

/// Left drive at pump [W], Delta_L = dl * omega_m and Delta_sag = ds * omega_m.
inline DriveContext drive_at(const DeviceParams& p, double pump, double dl, double ds) {
    return make_drive_from_shift(p, pump, dl * p.omega_m(), DriveDirection::left, ds * p.omega_m());
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace nrpl::testing
