#pragma once

#include <numbers>

namespace czsim {

// Internal units: angular frequency in rad/ns, time in ns, hbar = 1.
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double from_ghz(double f_ghz) { return kTwoPi * f_ghz; }
constexpr double to_ghz(double omega) { return omega / kTwoPi; }
constexpr double from_mhz(double f_mhz) { return kTwoPi * f_mhz * 1e-3; }
constexpr double from_khz(double f_khz) { return kTwoPi * f_khz * 1e-6; }

}  // namespace czsim
