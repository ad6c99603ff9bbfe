#pragma once

// JSON configuration with explicit unit annotations,
//   {"omega_m": {"value": 23.4e6, "unit": "Hz_x2pi"}}.
// Every quantity is converted to SI / rad/s on load. Unknown units, unknown
// keys and missing required fields are rejected with the offending path.

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "nrpl/constants.hpp"
#include "nrpl/dynamics.hpp"
#include "nrpl/errors.hpp"
#include "nrpl/physical_params.hpp"
#include "nrpl/steady_state.hpp"

namespace nrpl {

using json = nlohmann::ordered_json;

enum class Dimension { rate, length, mass, power, dimensionless, spin };

namespace units {

struct Scale {
    double factor;              // multiply to get SI / rad/s
    bool relative_to_omega_m;   // value is a multiple of omega_m
    bool sagnac_ratio;          // value is Delta_sag / omega_m (spin only)
};

inline std::optional<Scale> lookup(Dimension dim, std::string_view unit) {
    using M = std::map<std::string_view, double>;
    static const M rate{{"rad_per_s", 1.0}, {"Hz_x2pi", constants::two_pi}};
    static const M length{{"m", 1.0}, {"mm", 1e-3}, {"um", 1e-6}, {"nm", 1e-9}};
    static const M mass{{"kg", 1.0}, {"g", 1e-3}, {"mg", 1e-6}, {"ug", 1e-9}, {"ng", 1e-12}};
    static const M power{{"W", 1.0}, {"mW", 1e-3}, {"uW", 1e-6}, {"nW", 1e-9}};
    const auto find = [&](const M& m) -> std::optional<Scale> {
        if (auto it = m.find(unit); it != m.end()) return Scale{it->second, false, false};
        return std::nullopt;
    };
    switch (dim) {
        case Dimension::rate:
            if (unit == "omega_m") return Scale{1.0, true, false};
            return find(rate);
        case Dimension::spin:
            if (unit == "sagnac_over_omega_m") return Scale{1.0, false, true};
            return find(rate);
        case Dimension::length: return find(length);
        case Dimension::mass: return find(mass);
        case Dimension::power: return find(power);
        case Dimension::dimensionless:
            if (unit == "1") return Scale{1.0, false, false};
            return std::nullopt;
    }
    return std::nullopt;
}

inline std::string accepted(Dimension dim) {
    switch (dim) {
        case Dimension::rate: return "rad_per_s, Hz_x2pi, omega_m";
        case Dimension::spin: return "rad_per_s, Hz_x2pi, sagnac_over_omega_m";
        case Dimension::length: return "m, mm, um, nm";
        case Dimension::mass: return "kg, g, mg, ug, ng";
        case Dimension::power: return "W, mW, uW, nW";
        case Dimension::dimensionless: return "1";
    }
    return {};
}

}  // namespace units

/// A number with its declared unit, as read from a config file.
struct Quantity {
    double value = 0.0;
    std::string unit;

    bool operator==(const Quantity&) const = default;
};

inline json to_json(const Quantity& q) { return json{{"value", q.value}, {"unit", q.unit}}; }

namespace detail {

inline void reject_unknown_keys(const json& obj, std::string_view path,
                                std::initializer_list<std::string_view> known) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (auto k : known) ok = ok || it.key() == k;
        if (!ok) throw ValidationError(std::string(path) + "." + it.key(), "unknown key");
    }
}

inline const json& require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ValidationError(path, "must be a JSON object");
    return j;
}

}  // namespace detail

/// Parses {"value": v, "unit": u} and checks the unit belongs to `dim`.
inline Quantity parse_quantity(const json& j, const std::string& path, Dimension dim) {
    if (!j.is_object()) {
        throw ValidationError(path, "expected {\"value\": number, \"unit\": string}");
    }
    detail::reject_unknown_keys(j, path, {"value", "unit"});
    if (!j.contains("value") || !j.at("value").is_number()) {
        throw ValidationError(path + ".value", "missing or not a number");
    }
    if (!j.contains("unit") || !j.at("unit").is_string()) {
        throw ValidationError(path + ".unit", "missing or not a string");
    }
    Quantity q{j.at("value").get<double>(), j.at("unit").get<std::string>()};
    if (!std::isfinite(q.value)) throw ValidationError(path + ".value", "must be finite");
    if (!units::lookup(dim, q.unit)) {
        throw ValidationError(path + ".unit",
                              "unknown unit '" + q.unit + "' (accepted: " + units::accepted(dim) + ")");
    }
    return q;
}

/// Converts to SI / rad/s. `omega_m` is needed only for omega_m-relative units.
inline double to_si(const Quantity& q, Dimension dim, std::optional<double> omega_m = std::nullopt,
                    const std::string& path = "quantity") {
    const auto s = units::lookup(dim, q.unit);
    if (!s) throw ValidationError(path + ".unit", "unknown unit '" + q.unit + "'");
    if (s->sagnac_ratio) {
        throw ValidationError(path + ".unit", "sagnac_over_omega_m is not a spin speed");
    }
    if (s->relative_to_omega_m) {
        if (!omega_m) throw ValidationError(path + ".unit", "omega_m-relative unit not allowed here");
        return q.value * *omega_m;
    }
    return q.value * s->factor;
}

/// Spin given either as a speed Omega or directly as Delta_sag / omega_m.
struct SpinSetting {
    enum class Kind { speed, sagnac_ratio } kind = Kind::speed;
    double value = 0.0;  // rad/s for speed, dimensionless for sagnac_ratio

    bool operator==(const SpinSetting&) const = default;
};

struct DriveSettings {
    double pump_power = 0.0;  // W
    double detuning = 0.0;    // rad/s
    DriveDirection direction = DriveDirection::left;
    SpinSetting spin{};

    bool operator==(const DriveSettings&) const = default;
};

/// A sagnac_ratio spin is the signed shift Delta_sag / omega_m seen by the
/// chosen drive direction; the spin speed is back-computed from it.
inline DriveContext make_context(const DeviceParams& p, const DriveSettings& s) {
    if (s.spin.kind == SpinSetting::Kind::sagnac_ratio) {
        return make_drive_from_shift(p, s.pump_power, s.detuning, s.direction,
                                     s.spin.value * p.omega_m());
    }
    return make_drive(p, s.pump_power, s.detuning, s.direction, s.spin.value);
}

inline DriveDirection parse_direction(std::string_view s, const std::string& path = "direction") {
    if (s == "left") return DriveDirection::left;
    if (s == "right") return DriveDirection::right;
    throw ValidationError(path, "must be \"left\" or \"right\"");
}

struct Config {
    RawDeviceSpec raw{};
    DriveSettings drive{};
    SolverSettings solver{};
    LasingRunSettings dynamics{};

    DeviceParams device() const { return derive_device(raw); }
    DriveContext context() const { return make_context(device(), drive); }
};

namespace detail {

inline double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ValidationError(path, "must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ValidationError(path, "must be finite");
    return v;
}

inline int integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ValidationError(path, "must be an integer");
    return j.get<int>();
}

inline RawDeviceSpec parse_device(const json& dev) {
    require_object(dev, "device");
    reject_unknown_keys(dev, "device",
                        {"refractive_index", "radius_com", "radius_spin", "quality_com",
                         "quality_spin", "effective_mass", "omega_m", "gamma_m", "omega_c",
                         "wavelength", "J", "dispersion_coeff"});
    const auto field = [&](const char* key, Dimension dim) -> Quantity {
        if (!dev.contains(key)) throw ValidationError(std::string("device.") + key, "missing");
        return parse_quantity(dev.at(key), std::string("device.") + key, dim);
    };
    RawDeviceSpec r;
    r.mech_freq = to_si(field("omega_m", Dimension::rate), Dimension::rate, std::nullopt, "device.omega_m");
    const double wm = r.mech_freq;
    r.refractive_index = to_si(field("refractive_index", Dimension::dimensionless), Dimension::dimensionless);
    r.radius_com = to_si(field("radius_com", Dimension::length), Dimension::length);
    r.radius_spin = to_si(field("radius_spin", Dimension::length), Dimension::length);
    r.quality_com = to_si(field("quality_com", Dimension::dimensionless), Dimension::dimensionless);
    r.quality_spin = to_si(field("quality_spin", Dimension::dimensionless), Dimension::dimensionless);
    r.effective_mass = to_si(field("effective_mass", Dimension::mass), Dimension::mass);
    r.mech_damping = to_si(field("gamma_m", Dimension::rate), Dimension::rate, wm, "device.gamma_m");
    r.optical_coupling = to_si(field("J", Dimension::rate), Dimension::rate, wm, "device.J");
    if (dev.contains("dispersion_coeff")) {
        r.dispersion_coeff = to_si(parse_quantity(dev.at("dispersion_coeff"), "device.dispersion_coeff",
                                                  Dimension::dimensionless),
                                   Dimension::dimensionless);
    }
    const bool has_wc = dev.contains("omega_c");
    const bool has_wl = dev.contains("wavelength");
    if (has_wc == has_wl) {
        throw ValidationError("device.omega_c", "give exactly one of omega_c and wavelength");
    }
    if (has_wc) {
        r.resonance = to_si(field("omega_c", Dimension::rate), Dimension::rate, std::nullopt, "device.omega_c");
    } else {
        const double lambda = to_si(field("wavelength", Dimension::length), Dimension::length);
        if (!(lambda > 0.0)) throw ValidationError("device.wavelength", "must be positive");
        r.resonance = resonance_from_wavelength(lambda);
    }
    derive_device(r);  // validates ranges with field names
    return r;
}

}  // namespace detail

inline SpinSetting parse_spin(const json& j, const std::string& path) {
    const Quantity q = parse_quantity(j, path, Dimension::spin);
    if (units::lookup(Dimension::spin, q.unit)->sagnac_ratio) {
        return {SpinSetting::Kind::sagnac_ratio, q.value};
    }
    return {SpinSetting::Kind::speed, to_si(q, Dimension::spin, std::nullopt, path)};
}

inline DriveSettings parse_drive(const json& drv, double omega_m) {
    using detail::reject_unknown_keys;
    detail::require_object(drv, "drive");
    reject_unknown_keys(drv, "drive", {"pump_power", "detuning", "direction", "spin"});
    DriveSettings d;
    if (drv.contains("pump_power")) {
        d.pump_power = to_si(parse_quantity(drv.at("pump_power"), "drive.pump_power", Dimension::power),
                             Dimension::power);
    }
    if (drv.contains("detuning")) {
        d.detuning = to_si(parse_quantity(drv.at("detuning"), "drive.detuning", Dimension::rate),
                           Dimension::rate, omega_m, "drive.detuning");
    }
    if (drv.contains("direction")) {
        if (!drv.at("direction").is_string()) throw ValidationError("drive.direction", "must be a string");
        d.direction = parse_direction(drv.at("direction").get<std::string>(), "drive.direction");
    }
    if (drv.contains("spin")) d.spin = parse_spin(drv.at("spin"), "drive.spin");
    return d;
}

inline SolverSettings parse_solver(const json& j) {
    detail::require_object(j, "solver");
    detail::reject_unknown_keys(j, "solver",
                                {"tolerance", "max_iterations", "relaxation", "detect_multistability"});
    SolverSettings s;
    if (j.contains("tolerance")) s.tolerance = detail::number(j.at("tolerance"), "solver.tolerance");
    if (j.contains("max_iterations")) {
        s.max_iterations = detail::integer(j.at("max_iterations"), "solver.max_iterations");
    }
    if (j.contains("relaxation")) s.relaxation = detail::number(j.at("relaxation"), "solver.relaxation");
    if (j.contains("detect_multistability")) {
        if (!j.at("detect_multistability").is_boolean()) {
            throw ValidationError("solver.detect_multistability", "must be a boolean");
        }
        s.detect_multistability = j.at("detect_multistability").get<bool>();
    }
    validate(s);
    return s;
}

inline LasingRunSettings parse_dynamics(const json& j) {
    detail::require_object(j, "dynamics");
    detail::reject_unknown_keys(j, "dynamics",
                                {"rtol", "atol", "samples_per_period", "seed", "horizon_decays"});
    LasingRunSettings s;
    if (j.contains("rtol")) s.integrator.rtol = detail::number(j.at("rtol"), "dynamics.rtol");
    if (j.contains("atol")) s.integrator.atol = detail::number(j.at("atol"), "dynamics.atol");
    if (j.contains("samples_per_period")) {
        s.integrator.samples_per_period =
            detail::integer(j.at("samples_per_period"), "dynamics.samples_per_period");
    }
    if (j.contains("seed")) s.seed = detail::number(j.at("seed"), "dynamics.seed");
    if (j.contains("horizon_decays")) {
        s.horizon_decays = detail::number(j.at("horizon_decays"), "dynamics.horizon_decays");
    }
    if (!(s.integrator.rtol > 0.0)) throw ValidationError("dynamics.rtol", "must be positive");
    if (!(s.integrator.atol >= 0.0)) throw ValidationError("dynamics.atol", "must be non-negative");
    if (s.integrator.samples_per_period < 1) {
        throw ValidationError("dynamics.samples_per_period", "must be at least 1");
    }
    if (!(s.seed > 0.0)) throw ValidationError("dynamics.seed", "must be positive");
    if (!(s.horizon_decays > 0.0)) throw ValidationError("dynamics.horizon_decays", "must be positive");
    return s;
}

inline Config parse_config(const json& j) {
    detail::require_object(j, "config");
    detail::reject_unknown_keys(j, "config", {"device", "drive", "solver", "dynamics"});
    if (!j.contains("device")) throw ValidationError("device", "missing section");
    Config c;
    c.raw = detail::parse_device(j.at("device"));
    if (j.contains("drive")) c.drive = parse_drive(j.at("drive"), c.raw.mech_freq);
    if (j.contains("solver")) c.solver = parse_solver(j.at("solver"));
    if (j.contains("dynamics")) c.dynamics = parse_dynamics(j.at("dynamics"));
    return c;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config", "cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config", "'" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

inline json to_json(const SpinSetting& s) {
    return s.kind == SpinSetting::Kind::sagnac_ratio ? to_json(Quantity{s.value, "sagnac_over_omega_m"})
                                                     : to_json(Quantity{s.value, "rad_per_s"});
}

inline json to_json(const DriveSettings& d) {
    return json{{"pump_power", to_json(Quantity{d.pump_power, "W"})},
                {"detuning", to_json(Quantity{d.detuning, "rad_per_s"})},
                {"direction", std::string(to_string(d.direction))},
                {"spin", to_json(d.spin)}};
}

/// Fully resolved config in SI / rad/s; parse_config(to_json(c)) reproduces c.
inline json to_json(const Config& c) {
    const RawDeviceSpec& r = c.raw;
    json device{{"refractive_index", to_json(Quantity{r.refractive_index, "1"})},
                {"radius_com", to_json(Quantity{r.radius_com, "m"})},
                {"radius_spin", to_json(Quantity{r.radius_spin, "m"})},
                {"quality_com", to_json(Quantity{r.quality_com, "1"})},
                {"quality_spin", to_json(Quantity{r.quality_spin, "1"})},
                {"effective_mass", to_json(Quantity{r.effective_mass, "kg"})},
                {"omega_m", to_json(Quantity{r.mech_freq, "rad_per_s"})},
                {"gamma_m", to_json(Quantity{r.mech_damping, "rad_per_s"})},
                {"omega_c", to_json(Quantity{r.resonance, "rad_per_s"})},
                {"J", to_json(Quantity{r.optical_coupling, "rad_per_s"})},
                {"dispersion_coeff", to_json(Quantity{r.dispersion_coeff, "1"})}};
    json solver{{"tolerance", c.solver.tolerance},
                {"max_iterations", c.solver.max_iterations},
                {"relaxation", c.solver.relaxation},
                {"detect_multistability", c.solver.detect_multistability}};
    json dynamics{{"rtol", c.dynamics.integrator.rtol},
                  {"atol", c.dynamics.integrator.atol},
                  {"samples_per_period", c.dynamics.integrator.samples_per_period},
                  {"seed", c.dynamics.seed},
                  {"horizon_decays", c.dynamics.horizon_decays}};
    return json{{"device", device}, {"drive", to_json(c.drive)}, {"solver", solver}, {"dynamics", dynamics}};
}

/// The device used throughout the documentation and the acceptance suite:
/// omega_c = c / lambda and gamma_m = 0.24e6 rad/s (see README, unit convention).
inline Config reference_config() {
    static const char* text = R"({
  "device": {
    "refractive_index": {"value": 1.48, "unit": "1"},
    "radius_com": {"value": 34.5, "unit": "um"},
    "radius_spin": {"value": 4.75, "unit": "mm"},
    "quality_com": {"value": 9.7e7, "unit": "1"},
    "quality_spin": {"value": 3e7, "unit": "1"},
    "effective_mass": {"value": 50, "unit": "ng"},
    "omega_m": {"value": 23.4e6, "unit": "Hz_x2pi"},
    "gamma_m": {"value": 0.24e6, "unit": "rad_per_s"},
    "omega_c": {"value": 193414489032258.06, "unit": "rad_per_s"},
    "J": {"value": 0.5, "unit": "omega_m"},
    "dispersion_coeff": {"value": 0, "unit": "1"}
  },
  "drive": {
    "pump_power": {"value": 10, "unit": "uW"},
    "detuning": {"value": 0.45, "unit": "omega_m"},
    "direction": "left",
    "spin": {"value": 0.1, "unit": "sagnac_over_omega_m"}
  }
})";
    return parse_config(json::parse(text));
}

}  // namespace nrpl
