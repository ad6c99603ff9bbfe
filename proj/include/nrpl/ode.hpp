#pragma once

// Dormand-Prince 5(4) embedded Runge-Kutta integrator with FSAL and
// mixed absolute/relative error control, for fixed-size complex systems.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "nrpl/errors.hpp"

namespace nrpl::ode {

template <std::size_t N>
using ComplexState = std::array<std::complex<double>, N>;

struct Tolerances {
    double rtol = 1e-9;
    double atol = 1e-12;
};

struct StepStats {
    long accepted = 0;
    long rejected = 0;
    double max_error_estimate = 0.0;  // largest scaled error norm among accepted steps
    double min_step = std::numeric_limits<double>::infinity();
};

template <std::size_t N>
struct Solution {
    std::vector<double> times;
    std::vector<ComplexState<N>> states;
    StepStats stats;
};

namespace detail {

// Butcher tableau (Dormand & Prince 1980).
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b_hat (fifth minus fourth order weights)
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

template <std::size_t N>
ComplexState<N> axpy(const ComplexState<N>& y, double h,
                     std::initializer_list<std::pair<double, const ComplexState<N>*>> terms) {
    ComplexState<N> out = y;
    for (const auto& [w, k] : terms) {
        if (w == 0.0) continue;
        for (std::size_t i = 0; i < N; ++i) out[i] += (h * w) * (*k)[i];
    }
    return out;
}

template <std::size_t N>
bool all_finite(const ComplexState<N>& y) {
    return std::all_of(y.begin(), y.end(), [](const std::complex<double>& z) {
        return std::isfinite(z.real()) && std::isfinite(z.imag());
    });
}

}  // namespace detail

/// Integrates y' = f(t, y) from t0 to t_end and records the state every
/// `sample_interval` (steps are clipped to land on sample times; the first
/// sample is the initial state, the last one is t_end).
///
/// Throws IntegrationError on step-size underflow or a non-finite state.
template <std::size_t N, class Rhs>
Solution<N> integrate(const Rhs& f, double t0, const ComplexState<N>& y0, double t_end,
                      double sample_interval, const Tolerances& tol, double max_step = 0.0,
                      long max_steps = 50'000'000) {
    if (!(t_end > t0)) throw ValidationError("horizon", "must be positive");
    if (!(sample_interval > 0.0)) throw ValidationError("sample_interval", "must be positive");
    if (!(tol.rtol > 0.0) || !(tol.atol >= 0.0) || (tol.rtol == 0.0 && tol.atol == 0.0)) {
        throw ValidationError("tolerances", "rtol must be positive and atol non-negative");
    }
    if (!detail::all_finite(y0)) throw ValidationError("initial", "must be finite");
    using namespace detail;

    Solution<N> sol;
    const auto n_samples = static_cast<std::size_t>(std::floor((t_end - t0) / sample_interval));
    sol.times.reserve(n_samples + 2);
    sol.states.reserve(n_samples + 2);
    sol.times.push_back(t0);
    sol.states.push_back(y0);

    const auto error_norm = [&](const ComplexState<N>& y, const ComplexState<N>& y_new,
                                const ComplexState<N>& err) {
        double acc = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double scale = tol.atol + tol.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
            acc += std::norm(err[i]) / (scale * scale);
        }
        return std::sqrt(acc / static_cast<double>(N));
    };

    double t = t0;
    ComplexState<N> y = y0;
    ComplexState<N> k1 = f(t, y);

    // Initial step guess (Hairer, Norsett & Wanner, II.4).
    double h;
    {
        double d0 = 0.0, d1 = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = tol.atol + tol.rtol * std::abs(y[i]);
            d0 += std::norm(y[i]) / (sc * sc);
            d1 += std::norm(k1[i]) / (sc * sc);
        }
        d0 = std::sqrt(d0 / N);
        d1 = std::sqrt(d1 / N);
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * sample_interval : 0.01 * d0 / d1;
        h = std::min(h, sample_interval);
    }
    if (max_step > 0.0) h = std::min(h, max_step);

    std::size_t next_sample = 1;
    const auto sample_time = [&](std::size_t k) {
        return std::min(t0 + static_cast<double>(k) * sample_interval, t_end);
    };

    long steps = 0;
    while (t < t_end) {
        if (++steps > max_steps) {
            throw IntegrationError("integration exceeded the maximum number of steps", t);
        }
        const double target = sample_time(next_sample);
        bool lands = false;
        double step = h;
        if (t + step >= target) {
            step = target - t;
            lands = true;
        }
        if (step <= 16.0 * std::numeric_limits<double>::epsilon() * std::abs(t) ||
            step < std::numeric_limits<double>::min()) {
            throw IntegrationError("step size underflow (stiff or singular system) at t = " +
                                       std::to_string(t),
                                   t);
        }

        const ComplexState<N> k2 = f(t + c2 * step, axpy<N>(y, step, {{a21, &k1}}));
        const ComplexState<N> k3 = f(t + c3 * step, axpy<N>(y, step, {{a31, &k1}, {a32, &k2}}));
        const ComplexState<N> k4 =
            f(t + c4 * step, axpy<N>(y, step, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
        const ComplexState<N> k5 = f(
            t + c5 * step, axpy<N>(y, step, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
        const ComplexState<N> k6 = f(
            t + step,
            axpy<N>(y, step, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
        const ComplexState<N> y_new =
            axpy<N>(y, step, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
        const ComplexState<N> k7 = f(t + step, y_new);

        ComplexState<N> err{};
        for (std::size_t i = 0; i < N; ++i) {
            err[i] = step * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                             e7 * k7[i]);
        }
        const double en = error_norm(y, y_new, err);

        if (!std::isfinite(en)) {
            if (!all_finite(y_new)) {
                throw IntegrationError("state diverged (non-finite) at t = " + std::to_string(t),
                                       t);
            }
        }

        if (en <= 1.0) {
            t = lands ? target : t + step;
            y = y_new;
            k1 = k7;
            ++sol.stats.accepted;
            sol.stats.max_error_estimate = std::max(sol.stats.max_error_estimate, en);
            sol.stats.min_step = std::min(sol.stats.min_step, step);
            if (!all_finite(y)) {
                throw IntegrationError("state diverged (non-finite) at t = " + std::to_string(t),
                                       t);
            }
            if (lands) {
                sol.times.push_back(t);
                sol.states.push_back(y);
                ++next_sample;
            }
            const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
            // A step clipped to a sample boundary says little about the natural step.
            h = lands ? std::max(h, step * factor) : step * factor;
        } else {
            ++sol.stats.rejected;
            const double factor = std::isfinite(en) ? std::max(0.9 * std::pow(en, -0.2), 0.1) : 0.1;
            h = step * factor;
        }
        if (max_step > 0.0) h = std::min(h, max_step);
    }
    return sol;
}

}  // namespace nrpl::ode
