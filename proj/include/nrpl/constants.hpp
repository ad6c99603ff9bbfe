#pragma once

#include <numbers>

// CODATA 2018 values. hbar is derived from the exact Planck constant
// h = 6.62607015e-34 J s and rounded to the published 10 digits.
namespace nrpl::constants {

inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double c = 299792458.0;         // m / s
inline constexpr double two_pi = 2.0 * std::numbers::pi;

}  // namespace nrpl::constants
