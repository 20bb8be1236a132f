#pragma once

#include <numbers>

namespace nsm::constants {

// CODATA 2018 recommended values, SI units.
inline constexpr double G = 6.67430e-11;             // m^3 kg^-1 s^-2
inline constexpr double hbar = 1.054571817e-34;      // J s
inline constexpr double electron_mass = 9.1093837015e-31;  // kg
inline constexpr double elementary_charge = 1.602176634e-19;  // C

inline constexpr double pi = std::numbers::pi;

}  // namespace nsm::constants
