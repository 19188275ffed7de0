#pragma once

#include <numbers>

// CODATA 2018 values, SI units.
namespace ybqc::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline constexpr double planck = 6.62607015e-34;          // J s
inline constexpr double hbar = planck / two_pi;           // J s
inline constexpr double speed_of_light = 299792458.0;     // m/s
inline constexpr double boltzmann = 1.380649e-23;         // J/K
inline constexpr double bohr_magneton = 9.2740100783e-24; // J/T
inline constexpr double nuclear_magneton = 5.0507837461e-27; // J/T
inline constexpr double mu0_over_4pi = 1.00000000055e-7;  // T m / A
inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg

inline constexpr double gauss = 1e-4;              // T
inline constexpr double gauss_per_cm = 1e-2;       // T/m

} // namespace ybqc::constants
