#pragma once

// Command-line front end. cli_main is a plain function over argv and two
// streams so tests can drive it in-process.
//
// Exit codes: 0 success, 1 invalid input or violated precondition,
// 2 solver / integration / estimation failure.

#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "nrpl/config.hpp"
#include "nrpl/dynamics.hpp"
#include "nrpl/steady_state.hpp"
#include "nrpl/supermode_gain.hpp"
#include "nrpl/sweep.hpp"

namespace nrpl {

namespace cli_detail {

struct Options {
    std::string config_path;
    std::string out_path;
    std::string format = "csv";
    unsigned jobs = 1;
    std::optional<double> tolerance;

    std::optional<double> delta_l;    // omega_m
    std::optional<double> pump_uw;    // uW
    std::optional<double> sagnac;     // Delta_sag / omega_m
    std::optional<double> spin;       // rad/s
    std::optional<std::string> direction;
    std::optional<double> coupling;   // omega_m
    std::string inversion = "exact";

    // dynamics
    double horizon_decays = 0.0;
    std::string trajectory_path;
    std::size_t stride = 1;
    std::optional<double> scan_lo;   // uW
    std::optional<double> scan_hi;   // uW
    int scan_points = 8;

    // sweep / figure
    std::string spec_path;
    std::string preset;
    std::optional<int> points;
    bool spec_only = false;
};

using Record = std::vector<std::pair<std::string, double>>;

inline Config resolve_config(const Options& o) {
    Config c = o.config_path.empty() ? reference_config() : load_config(o.config_path);
    const double wm = c.raw.mech_freq;
    if (o.delta_l) c.drive.detuning = *o.delta_l * wm;
    if (o.pump_uw) {
        if (!(*o.pump_uw >= 0.0)) throw ValidationError("--pump", "must be non-negative");
        c.drive.pump_power = *o.pump_uw * 1e-6;
    }
    if (o.sagnac) c.drive.spin = {SpinSetting::Kind::sagnac_ratio, *o.sagnac};
    if (o.spin) c.drive.spin = {SpinSetting::Kind::speed, *o.spin};
    if (o.direction) c.drive.direction = parse_direction(*o.direction, "--direction");
    if (o.coupling) c.raw.optical_coupling = *o.coupling * wm;
    if (o.tolerance) c.solver.tolerance = *o.tolerance;
    derive_device(c.raw);
    validate(c.solver);
    return c;
}

inline InversionModel inversion_of(const Options& o) {
    return o.inversion == "approximate" ? InversionModel::approximate : InversionModel::exact;
}

/// Writes to --out when given, otherwise to `out`.
template <class Writer>
void with_target(const Options& o, std::ostream& out, Writer&& write) {
    if (o.out_path.empty()) {
        write(out);
        return;
    }
    std::ofstream f(o.out_path, std::ios::binary);
    if (!f) throw ValidationError("--out", "cannot open '" + o.out_path + "' for writing");
    write(f);
    if (!f) throw ValidationError("--out", "write to '" + o.out_path + "' failed");
}

inline void emit_record(const Record& r, const Options& o, const Config& c, std::ostream& out) {
    with_target(o, out, [&](std::ostream& s) {
        if (o.format == "json") {
            json values = json::object();
            for (const auto& [k, v] : r) values[k] = std::isfinite(v) ? json(v) : json(nullptr);
            json doc{{"values", values},
                     {"provenance",
                      {{"artifact", {{"name", kArtifactName}, {"version", kArtifactVersion}}},
                       {"config", to_json(c)}}}};
            s << doc.dump(2) << '\n';
        } else {
            for (std::size_t i = 0; i < r.size(); ++i) s << (i ? "," : "") << r[i].first;
            s << '\n';
            for (std::size_t i = 0; i < r.size(); ++i) {
                s << (i ? "," : "") << (std::isfinite(r[i].second) ? format_number(r[i].second) : "NA");
            }
            s << '\n';
        }
    });
}

inline void emit_sweep(const SweepResult& r, const Options& o, std::ostream& out) {
    with_target(o, out, [&](std::ostream& s) {
        if (o.format == "json") {
            s << to_json(r).dump(2) << '\n';
        } else {
            write_csv(s, r);
        }
    });
    // CSV stays byte-deterministic; the timestamped provenance goes next to it.
    if (o.format == "csv" && !o.out_path.empty()) {
        std::ofstream side(o.out_path + ".provenance.json", std::ios::binary);
        if (!side) throw ValidationError("--out", "cannot write provenance sidecar");
        side << r.provenance.dump(2) << '\n';
    }
}

inline int run_steady(const Options& o, std::ostream& out) {
    const Config c = resolve_config(o);
    const DeviceParams p = c.device();
    const DriveContext d = make_context(p, c.drive);
    const SteadyState st = solve_steady(p, d, c.solver);
    emit_record({{"a1_re[1]", st.a1.real()},
                 {"a1_im[1]", st.a1.imag()},
                 {"a2_re[1]", st.a2.real()},
                 {"a2_im[1]", st.a2.imag()},
                 {"b_re[1]", st.b.real()},
                 {"b_im[1]", st.b.imag()},
                 {"photon_number_1[1]", st.photon_number_1},
                 {"x_s[m]", st.x_s},
                 {"sagnac_shift[rad/s]", d.sagnac_shift},
                 {"iterations[1]", static_cast<double>(st.iterations)},
                 {"residual_norm[1]", st.residual_norm},
                 {"force_balance_residual[1]", force_balance_residual(st, p)}},
                o, c, out);
    return 0;
}

inline int run_gain(const Options& o, std::ostream& out) {
    const Config c = resolve_config(o);
    const DeviceParams p = c.device();
    const DriveContext d = make_context(p, c.drive);
    GainOptions opt;
    opt.inversion = inversion_of(o);
    opt.solver = c.solver;
    const GainBreakdown g = mechanical_gain(p, d, opt);
    emit_record({{"omega_plus[rad/s]", g.omega_plus},
                 {"omega_minus[rad/s]", g.omega_minus},
                 {"beta0[rad^2/s^2]", g.beta0},
                 {"beta[rad^2/s^2]", g.beta},
                 {"dn_exact[1]", g.dn_exact},
                 {"dn_approx[1]", g.dn_approx},
                 {"G0[rad/s]", g.G0},
                 {"G_sag[rad/s]", g.G_sag},
                 {"G[rad/s]", g.G},
                 {"G_over_gamma_m[1]", g.G / p.gamma_m()},
                 {"omega_prime[rad/s]", g.omega_prime},
                 {"D_re[1/s]", g.drive_term_D.real()},
                 {"D_im[1/s]", g.drive_term_D.imag()},
                 {"gamma_eff[rad/s]", g.gamma_eff},
                 {"N_b[1]", g.N_b}},
                o, c, out);
    return 0;
}

inline int run_threshold(const Options& o, std::ostream& out) {
    const Config c = resolve_config(o);
    const DeviceParams p = c.device();
    const DriveContext d = make_context(p, c.drive);
    const ThresholdResult t = threshold_power(p, d);
    emit_record({{"P_th[W]", t.power},
                 {"gain_mismatch[1]", t.gain_mismatch},
                 {"consistent[1]", t.consistent ? 1.0 : 0.0}},
                o, c, out);
    return 0;
}

inline int run_isolation(const Options& o, std::ostream& out) {
    const Config c = resolve_config(o);
    const DeviceParams p = c.device();
    const DriveContext d = make_context(p, c.drive);
    GainOptions opt;
    opt.inversion = inversion_of(o);
    opt.solver = c.solver;
    emit_record({{"spin_speed[rad/s]", d.spin_speed},
                 {"sagnac_over_omega_m[1]", d.sagnac_shift / p.omega_m()},
                 {"R[dB]", isolation(p, d, d.spin_speed, opt)}},
                o, c, out);
    return 0;
}

inline int run_dynamics(const Options& o, std::ostream& out) {
    const Config c = resolve_config(o);
    const DeviceParams p = c.device();
    const DriveContext d = make_context(p, c.drive);
    LasingRunSettings s = c.dynamics;
    s.solver = c.solver;
    if (o.horizon_decays > 0.0) s.horizon_decays = o.horizon_decays;

    if (o.scan_lo || o.scan_hi) {
        if (!o.scan_lo || !o.scan_hi || !(*o.scan_lo > 0.0) || !(*o.scan_hi > *o.scan_lo)) {
            throw ValidationError("--scan-lo/--scan-hi", "need 0 < lo < hi (uW)");
        }
        if (o.scan_points < 2) throw ValidationError("--scan-points", "must be at least 2");
        std::vector<double> grid;
        for (int i = 0; i < o.scan_points; ++i) {
            grid.push_back(1e-6 * (*o.scan_lo + (*o.scan_hi - *o.scan_lo) * i / (o.scan_points - 1)));
        }
        ThresholdSearchSettings ts;
        ts.run = s;
        const DynamicThreshold t = dynamic_threshold(p, d, grid, ts);
        double analytic = std::numeric_limits<double>::quiet_NaN();
        try {
            analytic = threshold_power(p, d).power;
        } catch (const DomainError&) {
        }
        emit_record({{"dynamic_threshold_lower[W]", t.lower},
                     {"dynamic_threshold_upper[W]", t.upper},
                     {"dynamic_threshold[W]", t.midpoint},
                     {"analytic_threshold[W]", analytic},
                     {"evaluations[1]", static_cast<double>(t.evaluations)}},
                    o, c, out);
        return 0;
    }

    const LasingRun run = run_lasing(p, d, s);
    if (!o.trajectory_path.empty()) {
        std::ofstream f(o.trajectory_path, std::ios::binary);
        if (!f) throw ValidationError("--trajectory", "cannot open '" + o.trajectory_path + "'");
        write_trajectory_csv(f, run.trajectory, o.stride);
    }
    GainOptions opt;
    opt.inversion = inversion_of(o);
    opt.solver = c.solver;
    const double gm = p.gamma_m();
    const double analytic = mechanical_gain(p, d, opt).G - gm;
    emit_record({{"growth_rate[1/s]", run.growth.rate},
                 {"growth_rate_over_gamma_m[1]", run.growth.rate / gm},
                 {"analytic_rate_over_gamma_m[1]", analytic / gm},
                 {"window_start[s]", run.growth.window.start},
                 {"window_end[s]", run.growth.window.end},
                 {"fit_residual[1]", run.growth.fit_residual},
                 {"saturated[1]", run.growth.saturated ? 1.0 : 0.0},
                 {"accepted_steps[1]", static_cast<double>(run.trajectory.stats.accepted)},
                 {"rejected_steps[1]", static_cast<double>(run.trajectory.stats.rejected)}},
                o, c, out);
    return 0;
}

inline int run_spec(SweepSpec spec, const Options& o, std::ostream& out) {
    const Config c = resolve_config(o);
    if (o.points) {
        if (*o.points < 2) throw ValidationError("--points", "must be at least 2");
        // Only the dense axes; the three-valued spin axes of the presets stay.
        for (SweepAxis& a : spec.axes) {
            if (a.count > 3) a.count = *o.points;
        }
    }
    if (!o.out_path.empty()) spec.output_path = o.out_path;
    validate(spec);
    emit_sweep(run_sweep(spec, c, o.jobs), o, out);
    return 0;
}

inline int run_sweep_command(const Options& o, std::ostream& out) {
    if (o.spec_path.empty()) throw ValidationError("--spec", "a sweep spec file is required");
    std::ifstream in(o.spec_path);
    if (!in) throw ValidationError("--spec", "cannot open '" + o.spec_path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("--spec", std::string("not valid JSON: ") + e.what());
    }
    return run_spec(parse_sweep_spec(j), o, out);
}

inline int run_figure(const Options& o, std::ostream& out) {
    SweepSpec spec = figure_preset(o.preset);
    if (o.spec_only) {
        with_target(o, out, [&](std::ostream& s) { s << to_json(spec).dump(2) << '\n'; });
        return 0;
    }
    return run_spec(std::move(spec), o, out);
}

}  // namespace cli_detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
    using namespace cli_detail;
    Options o;
    CLI::App app{"Nonreciprocal phonon laser: steady states, gain, thresholds, dynamics and sweeps",
                 "nrpl"};
    app.fallthrough();
    app.require_subcommand(1);
    app.add_option("--config", o.config_path, "Device/drive config (JSON, unit-annotated)");
    app.add_option("--out", o.out_path, "Output file (default: standard output)");
    app.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--jobs", o.jobs, "Worker threads for sweeps")->check(CLI::Range(1u, 1024u));
    app.add_option("--tolerance", o.tolerance, "Steady-state solver tolerance");

    const auto add_drive = [&](CLI::App* sub) {
        sub->add_option("--delta-L", o.delta_l, "Detuning Delta_L / omega_m");
        sub->add_option("--pump", o.pump_uw, "Pump power [uW]");
        auto* sag = sub->add_option("--sagnac", o.sagnac, "Sagnac shift Delta_sag / omega_m (signed)");
        auto* spin = sub->add_option("--spin", o.spin, "Spin speed Omega [rad/s]");
        sag->excludes(spin);
        sub->add_option("--direction", o.direction, "Drive direction")
            ->check(CLI::IsMember({"left", "right"}));
        sub->add_option("--J", o.coupling, "Optical coupling J / omega_m");
        sub->add_option("--inversion", o.inversion, "Population inversion model")
            ->check(CLI::IsMember({"exact", "approximate"}));
    };

    auto* steady = app.add_subcommand("steady", "Self-consistent steady state");
    auto* gain = app.add_subcommand("gain", "Mechanical gain breakdown");
    auto* threshold = app.add_subcommand("threshold", "Closed-form threshold pump power");
    auto* iso = app.add_subcommand("isolation", "Isolation R between the two spin directions");
    auto* dyn = app.add_subcommand("dynamics", "Integrate the equations of motion and fit the growth rate");
    auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep from a spec file");
    auto* figure = app.add_subcommand("figure", "Run a figure preset");
    for (auto* sub : {steady, gain, threshold, iso, dyn}) add_drive(sub);

    dyn->add_option("--horizon", o.horizon_decays, "Integration horizon in units of 1/gamma_m");
    dyn->add_option("--trajectory", o.trajectory_path, "Write the trajectory CSV here");
    dyn->add_option("--stride", o.stride, "Keep every n-th trajectory sample")->check(CLI::PositiveNumber);
    dyn->add_option("--scan-lo", o.scan_lo, "Dynamic threshold search: lowest pump [uW]");
    dyn->add_option("--scan-hi", o.scan_hi, "Dynamic threshold search: highest pump [uW]");
    dyn->add_option("--scan-points", o.scan_points, "Dynamic threshold search: grid points");
    sweep->add_option("--spec", o.spec_path, "Sweep spec (JSON)")->required();
    figure->add_option("preset", o.preset, "fig2a, fig2b, fig3, fig4a or fig4b")->required();
    figure->add_option("--points", o.points, "Override the point count of the dense axes");
    figure->add_flag("--spec-only", o.spec_only, "Print the resolved preset spec and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (steady->parsed()) return run_steady(o, out);
        if (gain->parsed()) return run_gain(o, out);
        if (threshold->parsed()) return run_threshold(o, out);
        if (iso->parsed()) return run_isolation(o, out);
        if (dyn->parsed()) return run_dynamics(o, out);
        if (sweep->parsed()) return run_sweep_command(o, out);
        if (figure->parsed()) return run_figure(o, out);
    } catch (const DomainError& e) {
        err << "error: precondition " << e.precondition() << " violated: " << e.what() << '\n';
        return 1;
    } catch (const ValidationError& e) {
        err << "error: invalid input: " << e.what() << '\n';
        return 1;
    } catch (const SolverError& e) {
        err << "error: solver failed: " << e.what() << '\n';
        return 2;
    } catch (const IntegrationError& e) {
        err << "error: integration failed: " << e.what() << '\n';
        return 2;
    } catch (const EstimationError& e) {
        err << "error: growth-rate estimation failed: " << e.what() << '\n';
        return 2;
    } catch (const BracketError& e) {
        err << "error: threshold search failed: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

}  // namespace nrpl
