#pragma once

// Time-domain integration of the coupled-mode equations, exponential growth
// rate extraction from the mechanical envelope, and a dynamic threshold search.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <future>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nrpl/coupled_modes.hpp"
#include "nrpl/errors.hpp"
#include "nrpl/ode.hpp"
#include "nrpl/physical_params.hpp"
#include "nrpl/steady_state.hpp"

namespace nrpl {

struct IntegratorSettings {
    double rtol = 1e-9;
    double atol = 1e-12;
    int samples_per_period = 16;  // output samples per mechanical period 2 pi / omega_m
};

struct Trajectory {
    std::vector<double> times;
    std::vector<cplx> a1;
    std::vector<cplx> a2;
    std::vector<cplx> b;
    ode::StepStats stats;

    std::size_t size() const noexcept { return times.size(); }
};

inline double mechanical_period(const DeviceParams& p) { return constants::two_pi / p.omega_m(); }

inline Trajectory integrate(const DeviceParams& p, const DriveContext& d, const ModeState& initial,
                            double horizon, const IntegratorSettings& s = {}) {
    if (!std::isfinite(horizon) || !(horizon > 0.0)) {
        throw ValidationError("horizon", "must be finite and positive");
    }
    if (s.samples_per_period < 1) {
        throw ValidationError("samples_per_period", "must be at least 1");
    }
    const CoupledModeEquations rhs(p, d);
    const double dt = mechanical_period(p) / s.samples_per_period;
    auto sol = ode::integrate<3>(rhs, 0.0, initial, horizon, dt, {s.rtol, s.atol});

    Trajectory tr;
    tr.times = std::move(sol.times);
    tr.stats = sol.stats;
    tr.a1.reserve(sol.states.size());
    tr.a2.reserve(sol.states.size());
    tr.b.reserve(sol.states.size());
    for (const ModeState& y : sol.states) {
        tr.a1.push_back(y[0]);
        tr.a2.push_back(y[1]);
        tr.b.push_back(y[2]);
    }
    return tr;
}

/// CSV with columns time, Re/Im of each amplitude and |b|. `stride` keeps every n-th sample.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& tr, std::size_t stride = 1) {
    if (stride == 0) stride = 1;
    out << "time[s],a1_re[1],a1_im[1],a2_re[1],a2_im[1],b_re[1],b_im[1],b_abs[1]\n";
    char buf[512];
    for (std::size_t k = 0; k < tr.size(); k += stride) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      tr.times[k], tr.a1[k].real(), tr.a1[k].imag(), tr.a2[k].real(),
                      tr.a2[k].imag(), tr.b[k].real(), tr.b[k].imag(), std::abs(tr.b[k]));
        out << buf;
    }
}

struct TimeWindow {
    double start = 0.0;
    double end = 0.0;
};

/// How the mechanical envelope is read off a trajectory.
struct EnvelopeSettings {
    double period = 0.0;   // mechanical period; one envelope point per period
    cplx center{};         // amplitude measured as |b - center| (steady-state b)
    double seed = 0.0;     // initial perturbation size, for window and saturation tests
    double gamma_m = 0.0;  // reference rate for the saturation test
};

struct GrowthEstimate {
    double rate = 0.0;          // fitted d ln|b - center| / dt [1/s]
    TimeWindow window;
    double fit_residual = 0.0;  // RMS of the log-linear fit
    bool saturated = false;
    std::size_t points = 0;     // envelope points used in the fit
};

struct Envelope {
    std::vector<double> times;
    std::vector<double> amplitudes;
};

/// One peak of |b - center| per mechanical period inside [window.start, window.end].
inline Envelope extract_envelope(const Trajectory& tr, TimeWindow window,
                                 const EnvelopeSettings& es) {
    Envelope env;
    if (!(es.period > 0.0)) throw ValidationError("period", "must be positive");
    std::size_t k = 0;
    while (k < tr.size() && tr.times[k] < window.start) ++k;
    while (k + 1 < tr.size() && tr.times[k] <= window.end) {
        // Half a sample of slack keeps bins from drifting on round-off.
        const double dt = tr.times[k + 1] - tr.times[k];
        const double bin_end = tr.times[k] + es.period - 0.5 * dt;
        double best = -1.0;
        double best_t = tr.times[k];
        std::size_t j = k;
        for (; j < tr.size() && tr.times[j] < bin_end && tr.times[j] <= window.end; ++j) {
            const double a = std::abs(tr.b[j] - es.center);
            if (a > best) {
                best = a;
                best_t = tr.times[j];
            }
        }
        // Drop a trailing partial period: its peak is biased low.
        const bool cut_by_window = j < tr.size() && tr.times[j] < bin_end;
        const bool cut_by_end = j == tr.size() && tr.times.back() + dt < bin_end;
        if (cut_by_window || cut_by_end) break;
        env.times.push_back(best_t);
        env.amplitudes.push_back(best);
        k = j;
    }
    return env;
}

namespace detail {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms = 0.0;
};

inline LineFit fit_log_line(const std::vector<double>& t, const std::vector<double>& amp) {
    const std::size_t n = t.size();
    double mt = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mt += t[i];
        my += std::log(amp[i]);
    }
    mt /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = t[i] - mt;
        sxx += dx * dx;
        sxy += dx * (std::log(amp[i]) - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mt;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::log(amp[i]) - (f.intercept + f.slope * t[i]);
        ss += r * r;
    }
    f.rms = std::sqrt(ss / n);
    return f;
}

inline std::size_t count_samples(const Trajectory& tr, TimeWindow w) {
    return static_cast<std::size_t>(std::count_if(tr.times.begin(), tr.times.end(), [&](double t) {
        return t >= w.start && t <= w.end;
    }));
}

}  // namespace detail

/// Log-linear least-squares fit of the per-period envelope over `window`.
/// The saturation flag looks at the trailing third of the whole trajectory.
inline GrowthEstimate estimate_growth_rate(const Trajectory& tr, TimeWindow window,
                                           const EnvelopeSettings& es) {
    if (tr.size() == 0) throw EstimationError("empty trajectory");
    if (window.start < tr.times.front() || window.end > tr.times.back() ||
        !(window.end > window.start)) {
        throw EstimationError("growth window lies outside the trajectory span");
    }
    if (detail::count_samples(tr, window) < 50) {
        throw EstimationError("growth window holds fewer than 50 samples");
    }
    const Envelope env = extract_envelope(tr, window, es);
    if (env.times.size() < 3) {
        throw EstimationError("growth window spans fewer than 3 mechanical periods");
    }
    for (double a : env.amplitudes) {
        if (!(a > 0.0)) throw EstimationError("zero mechanical amplitude inside the growth window");
    }
    const detail::LineFit fit = detail::fit_log_line(env.times, env.amplitudes);

    GrowthEstimate g;
    g.rate = fit.slope;
    g.window = window;
    g.fit_residual = fit.rms;
    g.points = env.times.size();

    if (es.gamma_m > 0.0 && es.seed > 0.0) {
        const double t0 = tr.times.front();
        const double t1 = tr.times.back();
        const TimeWindow tail{t0 + 2.0 * (t1 - t0) / 3.0, t1};
        const Envelope tail_env = extract_envelope(tr, tail, es);
        if (tail_env.times.size() >= 3 &&
            std::all_of(tail_env.amplitudes.begin(), tail_env.amplitudes.end(),
                        [](double a) { return a > 0.0; })) {
            const detail::LineFit tail_fit = detail::fit_log_line(tail_env.times, tail_env.amplitudes);
            const double peak = *std::max_element(tail_env.amplitudes.begin(), tail_env.amplitudes.end());
            g.saturated = std::abs(tail_fit.slope) < 0.01 * es.gamma_m && peak > 10.0 * es.seed;
        }
    }
    return g;
}

struct GrowthWindowSettings {
    double settle_time = 0.0;   // skip the initial optical transient
    double low_factor = 3.0;    // window opens when the envelope reaches low_factor * seed
    double high_factor = 30.0;  // and closes at high_factor * seed
};

/// Picks the linear-response window after the settling time. Growth: the
/// envelope between 3x and 30x the seed. Decay: from settling until the
/// envelope drops to seed / 30, before it reaches the round-off floor of
/// |b - b_s|. Otherwise (slow change near threshold) up to the end.
inline TimeWindow select_growth_window(const Trajectory& tr, const EnvelopeSettings& es,
                                       const GrowthWindowSettings& ws) {
    if (tr.size() == 0) throw EstimationError("empty trajectory");
    const double start = tr.times.front() + ws.settle_time;
    const TimeWindow full{start, tr.times.back()};
    if (!(full.end > full.start)) throw EstimationError("trajectory shorter than settling time");
    const Envelope env = extract_envelope(tr, full, es);
    const auto usable = [&](TimeWindow w) {
        return detail::count_samples(tr, w) >= 50 && extract_envelope(tr, w, es).times.size() >= 3;
    };
    std::optional<double> open;
    for (std::size_t i = 0; i < env.times.size(); ++i) {
        const double a = env.amplitudes[i];
        if (!open && a >= ws.low_factor * es.seed) open = env.times[i];
        if (a >= ws.high_factor * es.seed) {
            if (open && usable({*open, env.times[i]})) return {*open, env.times[i]};
            break;
        }
        if (a <= es.seed / ws.high_factor) {
            if (usable({start, env.times[i]})) return {start, env.times[i]};
            break;
        }
    }
    return full;
}

struct LasingRunSettings {
    double seed = 1e-3;            // added to the steady-state phonon amplitude
    double horizon_decays = 40.0;  // horizon in units of 1 / gamma_m
    IntegratorSettings integrator{};
    SolverSettings solver{};
};

struct LasingRun {
    SteadyState steady;
    Trajectory trajectory;
    EnvelopeSettings envelope;
    GrowthEstimate growth;
};

inline EnvelopeSettings envelope_settings(const DeviceParams& p, cplx center, double seed) {
    return {mechanical_period(p), center, seed, p.gamma_m()};
}

/// Starts at the self-consistent steady state with a small kick on b and
/// measures the growth (or decay) rate of |b - b_s|.
inline LasingRun run_lasing(const DeviceParams& p, const DriveContext& d,
                            const LasingRunSettings& s = {}) {
    if (!(s.seed > 0.0)) throw ValidationError("seed", "must be positive");
    if (!(p.gamma_m() > 0.0)) throw ValidationError("gamma_m", "must be positive for a lasing run");
    LasingRun run;
    run.steady = solve_steady(p, d, s.solver);
    const ModeState initial{run.steady.a1, run.steady.a2, run.steady.b + s.seed};
    run.trajectory = integrate(p, d, initial, s.horizon_decays / p.gamma_m(), s.integrator);
    run.envelope = envelope_settings(p, run.steady.b, s.seed);
    const GrowthWindowSettings ws{10.0 / p.gamma, 3.0, 30.0};
    const TimeWindow w = select_growth_window(run.trajectory, run.envelope, ws);
    run.growth = estimate_growth_rate(run.trajectory, w, run.envelope);
    return run;
}

struct DynamicThreshold {
    double lower = 0.0;   // highest power with negative growth rate [W]
    double upper = 0.0;   // lowest power with positive growth rate [W]
    double midpoint = 0.0;
    int evaluations = 0;
};

struct ThresholdSearchSettings {
    LasingRunSettings run{};
    double relative_width = 1e-3;  // stop when (upper - lower) <= relative_width * midpoint
    int max_bisections = 40;
};

/// Bisection on pump power for a vanishing fitted growth rate. Grid points are
/// evaluated concurrently; each run owns its state.
inline DynamicThreshold dynamic_threshold(const DeviceParams& p, const DriveContext& drive_shape,
                                          const std::vector<double>& power_grid,
                                          const ThresholdSearchSettings& s = {}) {
    if (power_grid.size() < 2) throw ValidationError("power_grid", "needs at least two powers");
    std::vector<double> grid = power_grid;
    std::sort(grid.begin(), grid.end());
    const auto rate_at = [&](double power) {
        return run_lasing(p, with_pump(drive_shape, power, p), s.run).growth.rate;
    };

    std::vector<std::future<double>> pending;
    pending.reserve(grid.size());
    for (double power : grid) {
        pending.push_back(std::async(std::launch::async, rate_at, power));
    }
    std::vector<double> rates;
    rates.reserve(grid.size());
    for (auto& f : pending) rates.push_back(f.get());

    DynamicThreshold out;
    out.evaluations = static_cast<int>(grid.size());
    std::optional<std::size_t> bracket;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        if (rates[i] < 0.0 && rates[i + 1] > 0.0) {
            bracket = i;
            break;
        }
    }
    if (!bracket) {
        throw BracketError("dynamic threshold: growth rate does not change sign over the power grid");
    }
    double lo = grid[*bracket];
    double hi = grid[*bracket + 1];
    for (int it = 0; it < s.max_bisections && (hi - lo) > s.relative_width * 0.5 * (hi + lo); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double r = rate_at(mid);
        ++out.evaluations;
        if (r > 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    out.lower = lo;
    out.upper = hi;
    out.midpoint = 0.5 * (lo + hi);
    return out;
}

}  // namespace nrpl
