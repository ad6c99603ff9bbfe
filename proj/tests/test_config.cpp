#include <gtest/gtest.h>

#include <string>

#include "nrpl/config.hpp"
#include "support.hpp"

using namespace nrpl;
using namespace nrpl::testing;

namespace {

const std::string kConfigs = std::string(NRPL_SOURCE_DIR) + "/configs/";

json reference_json() { return to_json(reference_config()); }

std::string field_of(const json& j) {
    try {
        parse_config(j);
    } catch (const ValidationError& e) {
        return e.field();
    }
    return "<accepted>";
}

}  // namespace

TEST(Config, ShippedReferenceConfigMatchesBuiltIn) {
    const Config file = load_config(kConfigs + "paper.json");
    const Config builtin = reference_config();
    const DeviceParams a = file.device();
    const DeviceParams b = builtin.device();
    EXPECT_EQ(a.omega_c(), b.omega_c());
    EXPECT_EQ(a.gamma_m(), 0.24e6);
    EXPECT_EQ(a.omega_m(), constants::two_pi * 23.4e6);
    EXPECT_EQ(a.J(), 0.5 * a.omega_m());
    EXPECT_EQ(a.raw.effective_mass, 50.0 * 1e-12);
    EXPECT_EQ(file.drive, builtin.drive);
    EXPECT_EQ(file.drive.spin.kind, SpinSetting::Kind::sagnac_ratio);
}

TEST(Config, SiReadingUsesAngularUnits) {
    const Config c = load_config(kConfigs + "paper_si.json");
    EXPECT_EQ(c.raw.resonance, resonance_from_wavelength(1550e-9));
    EXPECT_EQ(c.raw.mech_damping, constants::two_pi * 0.24e6);
    EXPECT_NEAR(c.device().gamma1, si_device().gamma1, 1e-6);
}

TEST(Config, UnitConversions) {
    EXPECT_EQ(to_si({2.0, "Hz_x2pi"}, Dimension::rate), 2.0 * constants::two_pi);
    EXPECT_EQ(to_si({3.0, "omega_m"}, Dimension::rate, 10.0), 30.0);
    EXPECT_DOUBLE_EQ(to_si({5.0, "uW"}, Dimension::power), 5e-6);
    EXPECT_EQ(to_si({7.0, "mm"}, Dimension::length), 7e-3);
    EXPECT_EQ(to_si({50.0, "ng"}, Dimension::mass), 50e-12);
    EXPECT_THROW(to_si({1.0, "omega_m"}, Dimension::rate), ValidationError);
    EXPECT_THROW(to_si({1.0, "furlong"}, Dimension::length), ValidationError);
}

TEST(Config, RoundTripThroughResolvedJson) {
    for (const char* name : {"paper.json", "paper_si.json"}) {
        const Config c = load_config(kConfigs + name);
        const Config again = parse_config(to_json(c));
        EXPECT_EQ(again.raw.resonance, c.raw.resonance);
        EXPECT_EQ(again.raw.mech_damping, c.raw.mech_damping);
        EXPECT_EQ(again.raw.optical_coupling, c.raw.optical_coupling);
        EXPECT_EQ(again.raw.radius_spin, c.raw.radius_spin);
        EXPECT_EQ(again.drive, c.drive);
        EXPECT_EQ(to_json(again), to_json(c));
    }
}

TEST(Config, RejectsUnknownUnit) {
    json j = reference_json();
    j["device"]["omega_m"]["unit"] = "MHz";
    EXPECT_EQ(field_of(j), "device.omega_m.unit");
    j = reference_json();
    j["drive"]["pump_power"]["unit"] = "omega_m";
    EXPECT_EQ(field_of(j), "drive.pump_power.unit");
    j = reference_json();
    j["device"]["omega_m"] = {{"value", 1.0}, {"unit", "omega_m"}};
    EXPECT_EQ(field_of(j), "device.omega_m.unit");
}

TEST(Config, RejectsUnknownKeys) {
    json j = reference_json();
    j["device"]["colour"] = {{"value", 1.0}, {"unit", "1"}};
    EXPECT_EQ(field_of(j), "device.colour");
    j = reference_json();
    j["extras"] = json::object();
    EXPECT_EQ(field_of(j), "config.extras");
    j = reference_json();
    j["device"]["J"]["scale"] = 2;
    EXPECT_EQ(field_of(j), "device.J.scale");
}

TEST(Config, ResonanceGivenExactlyOnce) {
    json j = reference_json();
    j["device"]["wavelength"] = {{"value", 1550.0}, {"unit", "nm"}};
    EXPECT_EQ(field_of(j), "device.omega_c");
    j["device"].erase("wavelength");
    j["device"].erase("omega_c");
    EXPECT_EQ(field_of(j), "device.omega_c");
}

TEST(Config, MissingAndInvalidFields) {
    json j = reference_json();
    j["device"].erase("effective_mass");
    EXPECT_EQ(field_of(j), "device.effective_mass");
    j = reference_json();
    j["device"]["radius_com"]["value"] = -1.0;
    EXPECT_EQ(field_of(j), "radius_com");
    j = reference_json();
    j["drive"]["direction"] = "up";
    EXPECT_EQ(field_of(j), "drive.direction");
    j = reference_json();
    j["solver"]["relaxation"] = 0.0;
    EXPECT_EQ(field_of(j), "relaxation");
    j = reference_json();
    j["dynamics"]["samples_per_period"] = 1.5;
    EXPECT_EQ(field_of(j), "dynamics.samples_per_period");
    EXPECT_THROW(load_config(kConfigs + "does_not_exist.json"), ValidationError);
}

TEST(Config, SpinBySpeedOrByShift) {
    json j = reference_json();
    j["drive"]["spin"] = {{"value", 6000.0}, {"unit", "rad_per_s"}};
    const Config speed = parse_config(j);
    EXPECT_EQ(speed.drive.spin.kind, SpinSetting::Kind::speed);
    const DriveContext d = speed.context();
    EXPECT_NEAR(d.sagnac_shift / speed.device().omega_m(), 0.1006, 1e-3);

    const Config ratio = reference_config();
    EXPECT_EQ(ratio.context().sagnac_shift, 0.1 * ratio.device().omega_m());

    j["drive"]["spin"] = {{"value", 0.1}, {"unit", "sagnac_over_omega_m"}};
    j["drive"]["direction"] = "right";
    const DriveContext r = parse_config(j).context();
    EXPECT_EQ(r.sagnac_shift, 0.1 * ratio.device().omega_m());
    EXPECT_LT(r.spin_speed, 0.0);
}
