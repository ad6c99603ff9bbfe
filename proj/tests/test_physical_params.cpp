#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "nrpl/physical_params.hpp"
#include "support.hpp"

using namespace nrpl;
using namespace nrpl::testing;

// Frozen from tests/oracles/reference_device_oracle.py (mpmath, 50 digits).
TEST(DeriveDevice, MatchesArbitraryPrecisionOracleSi) {
    const DeviceParams p = si_device();
    EXPECT_LT(rel(p.omega_c(), 1215259075683131.1467), 1e-15);
    EXPECT_LT(rel(p.gamma1, 12528444.079207537595), 1e-14);
    EXPECT_LT(rel(p.gamma2, 40508635.856104371556), 1e-14);
    EXPECT_LT(rel(p.zeta, 35224900744438583961.0), 1e-14);
    EXPECT_LT(rel(p.x0, 8.4691576570052178984e-17), 1e-14);
    EXPECT_LT(rel(p.g, 2983.2523785701083348), 1e-14);
}

TEST(DeriveDevice, MatchesArbitraryPrecisionOracleLiteral) {
    const DeviceParams p = literal_device();
    EXPECT_LT(rel(p.omega_c(), 193414489032258.06452), 1e-15);
    EXPECT_LT(rel(p.gamma1, 1993963.8044562687064), 1e-14);
    EXPECT_LT(rel(p.gamma2, 6447149.6344086021505), 1e-14);
    EXPECT_LT(rel(p.zeta, 5606217073398784478.7), 1e-14);
    EXPECT_LT(rel(p.g, 474.79936254008699254), 1e-14);
}

TEST(DeriveDevice, DerivedFieldsFollowDefinitionsExactly) {
    const DeviceParams p = si_device();
    EXPECT_EQ(p.gamma, 0.5 * (p.gamma1 + p.gamma2));
    EXPECT_EQ(p.gamma1, p.omega_c() / p.raw.quality_com);
    EXPECT_EQ(p.g, p.zeta * p.x0);
    EXPECT_GT(p.gamma, 0.0);
    EXPECT_GT(p.g, 0.0);
}

TEST(DeriveDevice, IsIdempotent) {
    const DeviceParams a = si_device();
    const DeviceParams b = derive_device(a.raw);
    EXPECT_EQ(a.gamma1, b.gamma1);
    EXPECT_EQ(a.gamma2, b.gamma2);
    EXPECT_EQ(a.gamma, b.gamma);
    EXPECT_EQ(a.zeta, b.zeta);
    EXPECT_EQ(a.x0, b.x0);
    EXPECT_EQ(a.g, b.g);
}

TEST(DeriveDevice, LosslessLimit) {
    RawDeviceSpec r = si_raw();
    r.quality_com = 1e30;
    const DeviceParams p = derive_device(r);
    EXPECT_LT(p.gamma1, 1e-12 * p.omega_c());
}

TEST(DeriveDevice, DoublingMassScalesZeroPointAmplitude) {
    RawDeviceSpec r = si_raw();
    const double x0 = derive_device(r).x0;
    r.effective_mass *= 2.0;
    EXPECT_NEAR(derive_device(r).x0 / x0, 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(DeriveDevice, RejectsInvalidFieldsByName) {
    const auto expect_field = [](RawDeviceSpec r, const char* field) {
        try {
            derive_device(r);
            ADD_FAILURE() << "no error for " << field;
        } catch (const ValidationError& e) {
            EXPECT_EQ(e.field(), field);
        }
    };
    RawDeviceSpec r = si_raw();
    r.radius_com = 0.0;
    expect_field(r, "radius_com");
    r = si_raw();
    r.refractive_index = 1.0;
    expect_field(r, "refractive_index");
    r = si_raw();
    r.quality_spin = std::numeric_limits<double>::infinity();
    expect_field(r, "quality_spin");
    r = si_raw();
    r.mech_damping = -1.0;
    expect_field(r, "mech_damping");
    r = si_raw();
    r.effective_mass = std::nan("");
    expect_field(r, "effective_mass");
    r = si_raw();
    r.dispersion_coeff = std::numeric_limits<double>::infinity();
    expect_field(r, "dispersion_coeff");
}

TEST(DeriveDevice, ZeroMechanicalDampingIsAllowed) {
    RawDeviceSpec r = si_raw();
    r.mech_damping = 0.0;
    EXPECT_NO_THROW(derive_device(r));
}

TEST(Wavelength, RoundTrip) {
    EXPECT_NEAR(wavelength_from_resonance(resonance_from_wavelength(1550e-9)), 1550e-9, 1e-22);
}

TEST(SagnacShift, VanishesWithoutRotation) {
    const DeviceParams p = literal_device();
    EXPECT_EQ(sagnac_shift(0.0, DriveDirection::left, p), 0.0);
    EXPECT_FALSE(std::signbit(sagnac_shift(0.0, DriveDirection::right, p)));
}

TEST(SagnacShift, OppositeDirectionsAreExactNegatives) {
    const DeviceParams p = si_device();
    for (double omega : {1.0, 6000.0, -3.7e4}) {
        EXPECT_EQ(sagnac_shift(omega, DriveDirection::left, p),
                  -sagnac_shift(omega, DriveDirection::right, p));
        // Swapping the drive is the same as reversing the spin.
        EXPECT_EQ(sagnac_shift(omega, DriveDirection::left, p),
                  sagnac_shift(-omega, DriveDirection::right, p));
    }
}

TEST(SagnacShift, SignConvention) {
    const DeviceParams p = si_device();
    EXPECT_GT(sagnac_shift(100.0, DriveDirection::left, p), 0.0);
    EXPECT_LT(sagnac_shift(100.0, DriveDirection::right, p), 0.0);
    EXPECT_LT(sagnac_shift(-100.0, DriveDirection::left, p), 0.0);
}

TEST(SagnacShift, OperatingPointOfTheReferenceDevice) {
    // 6000 rad/s with omega_c = c / lambda gives Delta_sag / omega_m ~ 0.1.
    const DeviceParams p = literal_device();
    const double ratio = sagnac_shift(6000.0, DriveDirection::left, p) / p.omega_m();
    EXPECT_NEAR(ratio, 0.1, 0.01);
    EXPECT_NEAR(sagnac_shift(6000.0, DriveDirection::left, p), 14.6e6, 0.05 * 14.6e6);
}

TEST(SagnacShift, DispersionTermEntersAsWritten) {
    RawDeviceSpec r = si_raw();
    const double n = r.refractive_index;
    const double base = sagnac_shift(1000.0, DriveDirection::left, derive_device(r));
    r.dispersion_coeff = 0.02;
    const double with = sagnac_shift(1000.0, DriveDirection::left, derive_device(r));
    const double expected = (1.0 - 1.0 / (n * n)) / (1.0 - 1.0 / (n * n) - 0.02);
    EXPECT_NEAR(base / with, expected, 1e-14);
    const double direct = 1000.0 * n * r.radius_spin * r.resonance / constants::c *
                          (1.0 - 1.0 / (n * n) - 0.02);
    EXPECT_NEAR(with / direct, 1.0, 1e-15);
}

TEST(SagnacShift, InverseRecoversSpin) {
    const DeviceParams p = si_device();
    for (auto dir : {DriveDirection::left, DriveDirection::right}) {
        const double shift = sagnac_shift(1234.5, dir, p);
        EXPECT_NEAR(spin_for_sagnac_shift(shift, dir, p), 1234.5, 1e-9);
    }
}

TEST(DriveAmplitude, MatchesArbitraryPrecisionOracle) {
    const DeviceParams si = si_device();
    const DeviceParams lit = literal_device();
    EXPECT_LT(rel(drive_amplitude(10e-6, 0.45 * si.omega_m(), si), 44217179690.68925551), 1e-14);
    EXPECT_LT(rel(drive_amplitude(10e-6, 0.45 * lit.omega_m(), lit), 44217173331.582210185), 1e-14);
}

TEST(DriveAmplitude, SquareRootLaw) {
    const DeviceParams p = si_device();
    EXPECT_EQ(drive_amplitude(0.0, 0.0, p), 0.0);
    const double e1 = drive_amplitude(3e-6, 1e6, p);
    EXPECT_NEAR(drive_amplitude(12e-6, 1e6, p) / e1, 2.0, 1e-15);
    const double k = e1 * e1 / 3e-6;
    for (double pw : {1e-9, 1e-6, 2.5e-5, 1e-3}) {
        const double e = drive_amplitude(pw, 1e6, p);
        EXPECT_NEAR(e * e / pw / k, 1.0, 1e-14);
    }
}

TEST(DriveAmplitude, RejectsNegativePower) {
    const DeviceParams p = si_device();
    EXPECT_THROW(drive_amplitude(-1e-6, 0.0, p), ValidationError);
    EXPECT_THROW(drive_amplitude(1e-6, -2.0 * p.omega_c(), p), ValidationError);
}

TEST(MakeDrive, ShiftSignFollowsSpinAndDirection) {
    const DeviceParams p = si_device();
    const DriveContext l = make_drive(p, 1e-6, 0.0, DriveDirection::left, 500.0);
    const DriveContext r = make_drive(p, 1e-6, 0.0, DriveDirection::right, 500.0);
    EXPECT_GT(l.sagnac_shift, 0.0);
    EXPECT_EQ(r.sagnac_shift, -l.sagnac_shift);
    const DriveContext s = make_drive_from_shift(p, 1e-6, 0.0, DriveDirection::right, 0.1 * p.omega_m());
    EXPECT_EQ(s.sagnac_shift, 0.1 * p.omega_m());
    EXPECT_LT(s.spin_speed, 0.0);
}

TEST(RwaMargin, Examples) {
    RawDeviceSpec r = si_raw();
    r.optical_coupling = 0.5 * r.mech_freq;
    EXPECT_EQ(rwa_margin(derive_device(r)), 0.0);
    r.optical_coupling = 0.55 * r.mech_freq;
    EXPECT_NEAR(rwa_margin(derive_device(r)), 0.1, 1e-12);
    r.optical_coupling = r.mech_freq;
    EXPECT_NEAR(rwa_margin(derive_device(r)), 1.0, 1e-15);
}
