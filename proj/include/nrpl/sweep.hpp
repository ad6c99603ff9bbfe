#pragma once

// Parameter sweeps over one or two axes, figure presets, and CSV / JSON
// emission. Grid points are independent; a bounded pool of workers fills a
// pre-sized table so the row order never depends on completion order.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "nrpl/config.hpp"
#include "nrpl/steady_state.hpp"
#include "nrpl/supermode_gain.hpp"

namespace nrpl {

inline constexpr const char* kArtifactName = "nrpl";
inline constexpr const char* kArtifactVersion = "1.0.0";

enum class SweepQuantity { delta_L, omega_spin, pump_power, coupling_J };
enum class Spacing { linear, log };
enum class SweepOutput { photon_number_1, x_s, eta, G, N_b, P_th, R, dn };

inline std::string_view to_string(SweepQuantity q) {
    switch (q) {
        case SweepQuantity::delta_L: return "delta_L";
        case SweepQuantity::omega_spin: return "omega_spin";
        case SweepQuantity::pump_power: return "pump_power";
        case SweepQuantity::coupling_J: return "coupling_J";
    }
    return {};
}

inline std::string_view to_string(Spacing s) { return s == Spacing::linear ? "linear" : "log"; }

inline std::string_view to_string(SweepOutput o) {
    switch (o) {
        case SweepOutput::photon_number_1: return "photon_number_1";
        case SweepOutput::x_s: return "x_s";
        case SweepOutput::eta: return "eta";
        case SweepOutput::G: return "G";
        case SweepOutput::N_b: return "N_b";
        case SweepOutput::P_th: return "P_th";
        case SweepOutput::R: return "R";
        case SweepOutput::dn: return "dn";
    }
    return {};
}

inline std::string_view to_string(InversionModel m) {
    return m == InversionModel::exact ? "exact" : "approximate";
}

inline SweepQuantity parse_sweep_quantity(std::string_view s, const std::string& path) {
    for (auto q : {SweepQuantity::delta_L, SweepQuantity::omega_spin, SweepQuantity::pump_power,
                   SweepQuantity::coupling_J}) {
        if (s == to_string(q)) return q;
    }
    throw ValidationError(path, "unknown quantity '" + std::string(s) +
                                    "' (accepted: delta_L, omega_spin, pump_power, coupling_J)");
}

inline SweepOutput parse_sweep_output(std::string_view s, const std::string& path) {
    for (auto o : {SweepOutput::photon_number_1, SweepOutput::x_s, SweepOutput::eta, SweepOutput::G,
                   SweepOutput::N_b, SweepOutput::P_th, SweepOutput::R, SweepOutput::dn}) {
        if (s == to_string(o)) return o;
    }
    throw ValidationError(path, "unknown output '" + std::string(s) + "'");
}

inline Dimension dimension_of(SweepQuantity q) {
    switch (q) {
        case SweepQuantity::delta_L:
        case SweepQuantity::coupling_J: return Dimension::rate;
        case SweepQuantity::omega_spin: return Dimension::spin;
        case SweepQuantity::pump_power: return Dimension::power;
    }
    return Dimension::dimensionless;
}

struct SweepAxis {
    SweepQuantity quantity = SweepQuantity::delta_L;
    double lo = 0.0;
    double hi = 0.0;
    int count = 2;
    Spacing spacing = Spacing::linear;
    std::string unit = "omega_m";  // unit of lo / hi and of the emitted column

    bool operator==(const SweepAxis&) const = default;

    /// Grid values in the axis unit; the end points are exact.
    std::vector<double> values() const {
        std::vector<double> v(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            const double f = static_cast<double>(i) / (count - 1);
            v[i] = spacing == Spacing::linear ? lo + f * (hi - lo)
                                              : std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)));
        }
        v.front() = lo;
        v.back() = hi;
        return v;
    }
};

struct FixedValue {
    SweepQuantity quantity;
    Quantity value;

    bool operator==(const FixedValue&) const = default;
};

struct SweepSpec {
    std::vector<SweepAxis> axes;               // outer axis first
    std::vector<FixedValue> fixed;             // applied to the config before the axes
    std::optional<DriveDirection> direction;
    std::vector<SweepOutput> outputs;
    InversionModel inversion = InversionModel::exact;
    std::string output_path;

    bool operator==(const SweepSpec&) const = default;
};

inline void validate(const SweepSpec& s) {
    if (s.axes.empty() || s.axes.size() > 2) {
        throw ValidationError("axes", "a sweep needs one or two axes");
    }
    for (std::size_t i = 0; i < s.axes.size(); ++i) {
        const SweepAxis& a = s.axes[i];
        const std::string path = "axes[" + std::to_string(i) + "]";
        if (a.count < 2) throw ValidationError(path + ".count", "must be at least 2");
        if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || !(a.lo < a.hi)) {
            throw ValidationError(path + ".range", "requires finite lo < hi");
        }
        if (a.spacing == Spacing::log && !(a.lo > 0.0)) {
            throw ValidationError(path + ".spacing", "log spacing requires lo > 0");
        }
        if (!units::lookup(dimension_of(a.quantity), a.unit)) {
            throw ValidationError(path + ".unit", "unit '" + a.unit + "' does not fit " +
                                                      std::string(to_string(a.quantity)) +
                                                      " (accepted: " +
                                                      units::accepted(dimension_of(a.quantity)) + ")");
        }
        for (std::size_t k = 0; k < i; ++k) {
            if (s.axes[k].quantity == a.quantity) throw ValidationError(path, "duplicate axis quantity");
        }
    }
    for (const FixedValue& f : s.fixed) {
        if (!units::lookup(dimension_of(f.quantity), f.value.unit)) {
            throw ValidationError("fixed." + std::string(to_string(f.quantity)),
                                  "unit '" + f.value.unit + "' does not fit this quantity");
        }
    }
    if (s.outputs.empty()) throw ValidationError("outputs", "request at least one output");
}

inline json to_json(const SweepSpec& s) {
    json axes = json::array();
    for (const SweepAxis& a : s.axes) {
        axes.push_back({{"quantity", to_string(a.quantity)},
                        {"lo", a.lo},
                        {"hi", a.hi},
                        {"count", a.count},
                        {"spacing", to_string(a.spacing)},
                        {"unit", a.unit}});
    }
    json fixed = json::object();
    for (const FixedValue& f : s.fixed) fixed[std::string(to_string(f.quantity))] = to_json(f.value);
    if (s.direction) fixed["direction"] = to_string(*s.direction);
    json outputs = json::array();
    for (SweepOutput o : s.outputs) outputs.push_back(to_string(o));
    return json{{"axes", axes},
                {"fixed", fixed},
                {"outputs", outputs},
                {"inversion", to_string(s.inversion)},
                {"output", s.output_path}};
}

inline SweepSpec parse_sweep_spec(const json& j) {
    detail::require_object(j, "sweep");
    detail::reject_unknown_keys(j, "sweep", {"axes", "fixed", "outputs", "inversion", "output"});
    SweepSpec s;
    if (!j.contains("axes") || !j.at("axes").is_array()) throw ValidationError("axes", "must be an array");
    for (std::size_t i = 0; i < j.at("axes").size(); ++i) {
        const json& a = j.at("axes")[i];
        const std::string path = "axes[" + std::to_string(i) + "]";
        detail::require_object(a, path);
        detail::reject_unknown_keys(a, path, {"quantity", "lo", "hi", "count", "spacing", "unit"});
        for (const char* key : {"quantity", "lo", "hi", "count", "unit"}) {
            if (!a.contains(key)) throw ValidationError(path + "." + key, "missing");
        }
        SweepAxis ax;
        if (!a.at("quantity").is_string()) throw ValidationError(path + ".quantity", "must be a string");
        ax.quantity = parse_sweep_quantity(a.at("quantity").get<std::string>(), path + ".quantity");
        ax.lo = detail::number(a.at("lo"), path + ".lo");
        ax.hi = detail::number(a.at("hi"), path + ".hi");
        ax.count = detail::integer(a.at("count"), path + ".count");
        if (!a.at("unit").is_string()) throw ValidationError(path + ".unit", "must be a string");
        ax.unit = a.at("unit").get<std::string>();
        if (a.contains("spacing")) {
            const json& sp = a.at("spacing");
            if (sp == "linear") {
                ax.spacing = Spacing::linear;
            } else if (sp == "log") {
                ax.spacing = Spacing::log;
            } else {
                throw ValidationError(path + ".spacing", "must be \"linear\" or \"log\"");
            }
        }
        s.axes.push_back(ax);
    }
    if (j.contains("fixed")) {
        const json& f = detail::require_object(j.at("fixed"), "fixed");
        for (auto it = f.begin(); it != f.end(); ++it) {
            const std::string path = "fixed." + it.key();
            if (it.key() == "direction") {
                if (!it.value().is_string()) throw ValidationError(path, "must be a string");
                s.direction = parse_direction(it.value().get<std::string>(), path);
                continue;
            }
            const SweepQuantity q = parse_sweep_quantity(it.key(), path);
            s.fixed.push_back({q, parse_quantity(it.value(), path, dimension_of(q))});
        }
    }
    if (!j.contains("outputs") || !j.at("outputs").is_array()) {
        throw ValidationError("outputs", "must be an array");
    }
    for (const json& o : j.at("outputs")) {
        if (!o.is_string()) throw ValidationError("outputs", "entries must be strings");
        s.outputs.push_back(parse_sweep_output(o.get<std::string>(), "outputs"));
    }
    if (j.contains("inversion")) {
        const json& m = j.at("inversion");
        if (m == "exact") {
            s.inversion = InversionModel::exact;
        } else if (m == "approximate") {
            s.inversion = InversionModel::approximate;
        } else {
            throw ValidationError("inversion", "must be \"exact\" or \"approximate\"");
        }
    }
    if (j.contains("output")) {
        if (!j.at("output").is_string()) throw ValidationError("output", "must be a string");
        s.output_path = j.at("output").get<std::string>();
    }
    validate(s);
    return s;
}

struct SweepResult {
    std::vector<std::string> columns;                   // "name[unit]"
    std::vector<std::vector<std::optional<double>>> rows;  // nullopt = not computable
    std::vector<std::string> markers;                   // per row; empty when all cells are numbers
    json provenance;
};

namespace detail {

/// Header label of an axis column in the axis' own unit.
inline std::string axis_column(const SweepAxis& a) {
    const std::string name(to_string(a.quantity));
    if (a.unit == "omega_m") return name + "_over_omega_m[1]";
    if (a.unit == "sagnac_over_omega_m") return "sagnac_over_omega_m[1]";
    if (a.unit == "rad_per_s") return name + "[rad/s]";
    if (a.unit == "Hz_x2pi") return name + "[Hz]";
    return name + "[" + a.unit + "]";
}

inline std::vector<std::string> output_columns(SweepOutput o) {
    switch (o) {
        case SweepOutput::photon_number_1: return {"photon_number_1[1]"};
        case SweepOutput::x_s: return {"x_s[m]"};
        case SweepOutput::eta: return {"eta_gt[1]", "eta_lt[1]"};
        case SweepOutput::G: return {"G[rad/s]", "G_over_gamma_m[1]"};
        case SweepOutput::N_b: return {"N_b[1]"};
        case SweepOutput::P_th: return {"P_th[W]"};
        case SweepOutput::R: return {"R[dB]"};
        case SweepOutput::dn: return {"dn_exact[1]", "dn_approx[1]"};
    }
    return {};
}

/// Applies an axis or fixed value (in its declared unit) to a config.
inline void apply(Config& c, SweepQuantity q, const Quantity& v) {
    const std::string path(to_string(q));
    const double wm = c.raw.mech_freq;
    switch (q) {
        case SweepQuantity::delta_L:
            c.drive.detuning = to_si(v, Dimension::rate, wm, path);
            break;
        case SweepQuantity::coupling_J:
            c.raw.optical_coupling = to_si(v, Dimension::rate, wm, path);
            break;
        case SweepQuantity::pump_power:
            c.drive.pump_power = to_si(v, Dimension::power, std::nullopt, path);
            break;
        case SweepQuantity::omega_spin:
            if (units::lookup(Dimension::spin, v.unit)->sagnac_ratio) {
                c.drive.spin = {SpinSetting::Kind::sagnac_ratio, v.value};
            } else {
                c.drive.spin = {SpinSetting::Kind::speed, to_si(v, Dimension::spin, std::nullopt, path)};
            }
            break;
    }
}

/// Short reason for a failed cell: the violated precondition or failure kind.
inline std::string failure_reason(const std::exception_ptr& e) {
    try {
        std::rethrow_exception(e);
    } catch (const DomainError& d) {
        return d.precondition();
    } catch (const ValidationError& v) {
        return "valid_" + v.field();
    } catch (const MultistableError&) {
        return "single_steady_state";
    } catch (const SolverError&) {
        return "steady_state_converged";
    } catch (const std::exception& x) {
        return x.what();
    }
}

struct Row {
    std::vector<std::optional<double>> cells;
    std::string marker;
};

inline Row evaluate_point(const Config& c, const SweepSpec& spec) {
    Row row;
    std::vector<std::string> reasons;
    const auto guarded = [&](SweepOutput o, std::size_t width, const auto& compute) {
        try {
            const std::vector<double> v = compute();
            for (double x : v) row.cells.push_back(std::isfinite(x) ? std::optional<double>(x) : std::nullopt);
            if (std::any_of(v.begin(), v.end(), [](double x) { return !std::isfinite(x); })) {
                reasons.push_back(std::string(to_string(o)) + ":finite");
            }
        } catch (const std::exception&) {
            row.cells.insert(row.cells.end(), width, std::nullopt);
            reasons.push_back(std::string(to_string(o)) + ":" + failure_reason(std::current_exception()));
        }
    };

    std::optional<DeviceParams> p;
    std::optional<DriveContext> d;
    std::exception_ptr setup_error;
    try {
        p = c.device();
        d = make_context(*p, c.drive);
    } catch (const std::exception&) {
        setup_error = std::current_exception();
    }
    std::optional<SteadyState> steady;
    std::exception_ptr steady_error;
    const auto need_steady = [&]() -> const SteadyState& {
        if (setup_error) std::rethrow_exception(setup_error);
        if (steady_error) std::rethrow_exception(steady_error);
        if (!steady) {
            try {
                steady = solve_steady(*p, *d, c.solver);
            } catch (const std::exception&) {
                steady_error = std::current_exception();
                throw;
            }
        }
        return *steady;
    };
    std::optional<GainBreakdown> gain;
    const auto need_gain = [&]() -> const GainBreakdown& {
        if (!gain) {
            const SteadyState& st = need_steady();
            const OperatingPoint op{*p, *d, std::norm(st.b), st.b};
            gain = mechanical_gain(op, spec.inversion);
        }
        return *gain;
    };
    const auto need_setup = [&] {
        if (setup_error) std::rethrow_exception(setup_error);
    };

    for (SweepOutput o : spec.outputs) {
        const std::size_t width = output_columns(o).size();
        switch (o) {
            case SweepOutput::photon_number_1:
                guarded(o, width, [&] { return std::vector<double>{need_steady().photon_number_1}; });
                break;
            case SweepOutput::x_s:
                guarded(o, width, [&] { return std::vector<double>{need_steady().x_s}; });
                break;
            case SweepOutput::eta:
                guarded(o, width, [&] {
                    need_setup();
                    const double mag = std::abs(d->sagnac_shift);
                    const auto at = [&](double shift) {
                        return make_drive_from_shift(*p, d->pump_power, d->detuning, d->direction, shift);
                    };
                    const DisplacementRatio r = displacement_ratio(*p, at(mag), at(-mag), at(0.0), c.solver);
                    return std::vector<double>{r.eta_gt, r.eta_lt};
                });
                break;
            case SweepOutput::G:
                guarded(o, width, [&] {
                    const double g = need_gain().G;
                    return std::vector<double>{g, g / p->gamma_m()};
                });
                break;
            case SweepOutput::N_b:
                guarded(o, width, [&] { return std::vector<double>{need_gain().N_b}; });
                break;
            case SweepOutput::P_th:
                guarded(o, width, [&] {
                    need_setup();
                    return std::vector<double>{threshold_power(*p, *d).power};
                });
                break;
            case SweepOutput::R:
                guarded(o, width, [&] {
                    need_setup();
                    GainOptions opt;
                    opt.inversion = spec.inversion;
                    opt.solver = c.solver;
                    return std::vector<double>{isolation(*p, *d, d->spin_speed, opt)};
                });
                break;
            case SweepOutput::dn:
                guarded(o, width, [&] {
                    const GainBreakdown& g = need_gain();
                    return std::vector<double>{g.dn_exact, g.dn_approx};
                });
                break;
        }
    }
    for (std::size_t i = 0; i < reasons.size(); ++i) row.marker += (i ? ";" : "") + reasons[i];
    return row;
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace detail

/// Evaluates every grid point (outer axis major). Failing cells become NA
/// with a marker naming the reason; the sweep itself never aborts.
inline SweepResult run_sweep(const SweepSpec& spec, const Config& base, unsigned jobs = 1) {
    validate(spec);
    validate(base.solver);
    Config fixed = base;
    if (spec.direction) fixed.drive.direction = *spec.direction;
    for (const FixedValue& f : spec.fixed) detail::apply(fixed, f.quantity, f.value);

    SweepResult res;
    for (const SweepAxis& a : spec.axes) res.columns.push_back(detail::axis_column(a));
    for (SweepOutput o : spec.outputs) {
        for (auto& col : detail::output_columns(o)) res.columns.push_back(col);
    }

    const std::vector<double> outer = spec.axes[0].values();
    const std::vector<double> inner = spec.axes.size() > 1 ? spec.axes[1].values() : std::vector<double>{0.0};
    const std::size_t n = outer.size() * inner.size();
    std::vector<detail::Row> rows(n);
    std::vector<std::vector<double>> coords(n);

    const auto work = [&](std::size_t k) {
        Config c = fixed;
        std::vector<double> xs{outer[k / inner.size()]};
        if (spec.axes.size() > 1) xs.push_back(inner[k % inner.size()]);
        for (std::size_t a = 0; a < xs.size(); ++a) {
            detail::apply(c, spec.axes[a].quantity, Quantity{xs[a], spec.axes[a].unit});
        }
        coords[k] = std::move(xs);
        rows[k] = detail::evaluate_point(c, spec);
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
    if (workers == 1) {
        for (std::size_t k = 0; k < n; ++k) work(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < n; k = next++) {
                    try {
                        work(k);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    res.rows.reserve(n);
    res.markers.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<std::optional<double>> r(coords[k].begin(), coords[k].end());
        r.insert(r.end(), rows[k].cells.begin(), rows[k].cells.end());
        res.rows.push_back(std::move(r));
        res.markers.push_back(std::move(rows[k].marker));
    }
    res.provenance = json{{"artifact", {{"name", kArtifactName}, {"version", kArtifactVersion}}},
                          {"config", to_json(base)},
                          {"sweep", to_json(spec)},
                          {"timestamp", detail::utc_timestamp()}};
    return res;
}

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Comma-separated, LF line endings, 17 significant digits, NA for
/// non-computable cells and a trailing marker column.
inline void write_csv(std::ostream& out, const SweepResult& r) {
    for (const auto& c : r.columns) out << c << ',';
    out << "marker\n";
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        for (const auto& cell : r.rows[i]) out << (cell ? format_number(*cell) : "NA") << ',';
        out << r.markers[i] << '\n';
    }
}

/// JSON table; null marks a non-computable cell. The provenance block is
/// included (it carries the only non-deterministic field, the timestamp).
inline json to_json(const SweepResult& r) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        json jr = json::array();
        for (const auto& cell : row) jr.push_back(cell ? json(*cell) : json(nullptr));
        rows.push_back(std::move(jr));
    }
    return json{{"columns", r.columns}, {"rows", rows}, {"markers", r.markers}, {"provenance", r.provenance}};
}

/// Specs reproducing the figure data. Spin is pinned through Delta_sag / omega_m;
/// grid densities are 400 points (1-D axes) and 200 x 200 (2-D maps).
inline SweepSpec figure_preset(std::string_view name) {
    const SweepAxis spin3{SweepQuantity::omega_spin, -0.1, 0.1, 3, Spacing::linear, "sagnac_over_omega_m"};
    const FixedValue j_half{SweepQuantity::coupling_J, {0.5, "omega_m"}};
    const FixedValue pump10{SweepQuantity::pump_power, {10.0, "uW"}};
    SweepSpec s;
    s.direction = DriveDirection::left;
    if (name == "fig2a") {
        s.axes = {spin3, {SweepQuantity::delta_L, -1.5, 1.5, 400, Spacing::linear, "omega_m"}};
        s.fixed = {j_half, pump10};
        s.outputs = {SweepOutput::photon_number_1, SweepOutput::x_s};
    } else if (name == "fig2b") {
        s.axes = {{SweepQuantity::delta_L, -1.5, 1.5, 400, Spacing::linear, "omega_m"}};
        s.fixed = {j_half, pump10, {SweepQuantity::omega_spin, {0.1, "sagnac_over_omega_m"}}};
        s.outputs = {SweepOutput::eta};
    } else if (name == "fig3") {
        s.axes = {spin3, {SweepQuantity::delta_L, 0.3, 0.7, 400, Spacing::linear, "omega_m"}};
        s.fixed = {j_half, pump10};
        s.outputs = {SweepOutput::G};
    } else if (name == "fig4a") {
        s.axes = {spin3, {SweepQuantity::pump_power, 0.5, 30.0, 400, Spacing::linear, "uW"}};
        s.fixed = {j_half, {SweepQuantity::delta_L, {0.45, "omega_m"}}};
        s.outputs = {SweepOutput::N_b, SweepOutput::G, SweepOutput::P_th};
    } else if (name == "fig4b") {
        s.axes = {{SweepQuantity::delta_L, 0.3, 0.7, 200, Spacing::linear, "omega_m"},
                  {SweepQuantity::omega_spin, 0.0, 0.1, 200, Spacing::linear, "sagnac_over_omega_m"}};
        s.fixed = {j_half, pump10};
        s.outputs = {SweepOutput::R};
    } else {
        throw ValidationError("preset", "unknown figure preset '" + std::string(name) +
                                            "' (accepted: fig2a, fig2b, fig3, fig4a, fig4b)");
    }
    s.output_path = std::string(name) + ".csv";
    return s;
}

}  // namespace nrpl
