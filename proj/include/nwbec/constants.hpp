#pragma once

#include <numbers>

// CODATA 2018 values, SI units.
namespace nwbec::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double hbar = 1.054571817e-34;             // J s
inline constexpr double bohr_magneton = 9.2740100783e-24;   // J/T
inline constexpr double vacuum_permeability = 1.25663706212e-6;  // T m/A

inline constexpr double rb87_mass = 1.4432e-25;              // kg
inline constexpr double rb87_scattering_length = 5.31e-9;    // m, F=1
inline constexpr double rb87_lande_g = -0.5;                 // F=1

}  // namespace nwbec::constants
