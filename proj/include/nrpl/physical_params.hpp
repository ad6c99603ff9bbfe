#pragma once

// Device and drive description for a stationary optomechanical resonator
// evanescently coupled to a spinning optical resonator.
//
// Unit convention: every frequency, rate, detuning and shift is angular
// (rad/s). Lengths in m, masses in kg, powers in W. Conversions from
// cyclic or normalized units happen only in the config loader.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "nrpl/constants.hpp"
#include "nrpl/errors.hpp"

namespace nrpl {

struct RawDeviceSpec {
    double refractive_index = 0.0;   // n
    double radius_com = 0.0;         // r1, optomechanical resonator [m]
    double radius_spin = 0.0;        // r2, spinning resonator [m]
    double quality_com = 0.0;        // Q1
    double quality_spin = 0.0;       // Q2
    double effective_mass = 0.0;     // m [kg]
    double mech_freq = 0.0;          // omega_m [rad/s]
    double mech_damping = 0.0;       // gamma_m [rad/s]
    double resonance = 0.0;          // omega_c [rad/s]
    double optical_coupling = 0.0;   // J [rad/s]
    double dispersion_coeff = 0.0;   // (lambda/n) dn/dlambda
};

struct DeviceParams {
    RawDeviceSpec raw;
    double gamma1 = 0.0;  // omega_c / Q1
    double gamma2 = 0.0;  // omega_c / Q2
    double gamma = 0.0;   // (gamma1 + gamma2) / 2
    double zeta = 0.0;    // omega_c / r1 [rad/s per m]
    double x0 = 0.0;      // sqrt(hbar / 2 m omega_m) [m]
    double g = 0.0;       // zeta * x0 [rad/s]

    double omega_m() const noexcept { return raw.mech_freq; }
    double gamma_m() const noexcept { return raw.mech_damping; }
    double omega_c() const noexcept { return raw.resonance; }
    double J() const noexcept { return raw.optical_coupling; }
};

enum class DriveDirection { left, right };

inline std::string_view to_string(DriveDirection d) noexcept {
    return d == DriveDirection::left ? "left" : "right";
}

struct DriveContext {
    double pump_power = 0.0;        // P_in [W]
    double detuning = 0.0;          // Delta_L = omega_L - omega_c [rad/s]
    DriveDirection direction = DriveDirection::left;
    double spin_speed = 0.0;        // Omega [rad/s], positive = CCW
    double sagnac_shift = 0.0;      // Delta_sag [rad/s]
    double drive_amplitude = 0.0;   // epsilon_L, real and non-negative
};

inline double resonance_from_wavelength(double wavelength) {
    return constants::two_pi * constants::c / wavelength;
}

inline double wavelength_from_resonance(double resonance) {
    return constants::two_pi * constants::c / resonance;
}

namespace detail {

inline void require_positive(double v, const char* field) {
    if (!std::isfinite(v) || !(v > 0.0)) {
        throw ValidationError(field, "must be finite and strictly positive");
    }
}

}  // namespace detail

inline DeviceParams derive_device(const RawDeviceSpec& raw) {
    using detail::require_positive;
    if (!std::isfinite(raw.refractive_index) || !(raw.refractive_index > 1.0)) {
        throw ValidationError("refractive_index", "must be finite and greater than 1");
    }
    require_positive(raw.radius_com, "radius_com");
    require_positive(raw.radius_spin, "radius_spin");
    require_positive(raw.quality_com, "quality_com");
    require_positive(raw.quality_spin, "quality_spin");
    require_positive(raw.effective_mass, "effective_mass");
    require_positive(raw.mech_freq, "mech_freq");
    require_positive(raw.resonance, "resonance");
    if (!std::isfinite(raw.optical_coupling) || raw.optical_coupling < 0.0) {
        throw ValidationError("optical_coupling", "must be finite and non-negative");
    }
    if (!std::isfinite(raw.mech_damping) || raw.mech_damping < 0.0) {
        throw ValidationError("mech_damping", "must be finite and non-negative");
    }
    if (!std::isfinite(raw.dispersion_coeff)) {
        throw ValidationError("dispersion_coeff", "must be finite");
    }

    DeviceParams p;
    p.raw = raw;
    p.gamma1 = raw.resonance / raw.quality_com;
    p.gamma2 = raw.resonance / raw.quality_spin;
    p.gamma = 0.5 * (p.gamma1 + p.gamma2);
    p.zeta = raw.resonance / raw.radius_com;
    p.x0 = std::sqrt(constants::hbar / (2.0 * raw.effective_mass * raw.mech_freq));
    p.g = p.zeta * p.x0;
    return p;
}

/// Sagnac-Fizeau shift per unit spin speed for a left (CCW-co-propagating) drive.
inline double sagnac_coefficient(const DeviceParams& p) {
    const double n = p.raw.refractive_index;
    return n * p.raw.radius_spin * p.omega_c() / constants::c *
           (1.0 - 1.0 / (n * n) - p.raw.dispersion_coeff);
}

/// CCW spin (Omega > 0) with a left drive red-shifts the spinning mode: Delta_sag > 0.
/// Reversing either the spin or the drive direction flips the sign.
inline double sagnac_shift(double spin_speed, DriveDirection direction, const DeviceParams& p) {
    if (!std::isfinite(spin_speed)) {
        throw ValidationError("spin_speed", "must be finite");
    }
    const double magnitude = spin_speed * sagnac_coefficient(p);
    const double shift = direction == DriveDirection::left ? magnitude : -magnitude;
    return shift == 0.0 ? 0.0 : shift;  // no signed zero
}

/// Spin speed that produces the given shift for the given drive direction.
inline double spin_for_sagnac_shift(double shift, DriveDirection direction, const DeviceParams& p) {
    const double k = sagnac_coefficient(p);
    if (shift == 0.0) return 0.0;
    if (k == 0.0) {
        throw ValidationError("sagnac_shift", "device has a vanishing Sagnac coefficient");
    }
    const double omega = shift / k;
    return direction == DriveDirection::left ? omega : -omega;
}

inline double drive_amplitude(double pump_power, double detuning, const DeviceParams& p) {
    if (!std::isfinite(pump_power) || pump_power < 0.0) {
        throw ValidationError("pump_power", "must be finite and non-negative");
    }
    const double omega_l = p.omega_c() + detuning;
    if (!std::isfinite(omega_l) || !(omega_l > 0.0)) {
        throw ValidationError("detuning", "laser frequency omega_c + Delta_L must be positive");
    }
    return std::sqrt(2.0 * p.gamma1 * pump_power / (constants::hbar * omega_l));
}

inline DriveContext make_drive(const DeviceParams& p, double pump_power, double detuning,
                               DriveDirection direction, double spin_speed) {
    if (!std::isfinite(detuning)) {
        throw ValidationError("detuning", "must be finite");
    }
    DriveContext d;
    d.pump_power = pump_power;
    d.detuning = detuning;
    d.direction = direction;
    d.spin_speed = spin_speed;
    d.sagnac_shift = sagnac_shift(spin_speed, direction, p);
    d.drive_amplitude = drive_amplitude(pump_power, detuning, p);
    return d;
}

/// Builds a drive from the desired signed shift rather than from Omega.
inline DriveContext make_drive_from_shift(const DeviceParams& p, double pump_power,
                                          double detuning, DriveDirection direction,
                                          double shift) {
    DriveContext d = make_drive(p, pump_power, detuning, direction,
                                spin_for_sagnac_shift(shift, direction, p));
    // Keep the requested shift bit-exact instead of the round trip through Omega.
    d.sagnac_shift = shift == 0.0 ? 0.0 : shift;
    return d;
}

inline DriveContext with_pump(const DriveContext& d, double pump_power, const DeviceParams& p) {
    DriveContext out = d;
    out.pump_power = pump_power;
    out.drive_amplitude = drive_amplitude(pump_power, d.detuning, p);
    return out;
}

/// |2J - omega_m| / min(omega_m, 2J + omega_m); small values mean the
/// rotating-wave treatment of the supermode interaction is justified.
inline double rwa_margin(const DeviceParams& p) {
    const double two_j = 2.0 * p.J();
    return std::abs(two_j - p.omega_m()) / std::min(p.omega_m(), two_j + p.omega_m());
}

}  // namespace nrpl
