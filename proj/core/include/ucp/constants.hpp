#pragma once

// CODATA 2018 values in SI units, plus the astronomical constants used for
// the cluster unit system.

#include <numbers>

namespace ucp::constants {

inline constexpr double pi = std::numbers::pi;

inline constexpr double elementary_charge = 1.602176634e-19;   // C
inline constexpr double electron_mass = 9.1093837015e-31;      // kg
inline constexpr double epsilon0 = 8.8541878128e-12;           // F/m
inline constexpr double boltzmann = 1.380649e-23;              // J/K
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double gravitational = 6.67430e-11;           // m^3 kg^-1 s^-2

inline constexpr double cesium133_mass = 132.905451961 * atomic_mass_unit;

inline constexpr double solar_mass = 1.98847e30;               // kg
inline constexpr double parsec = 3.0856775814913673e16;        // m
inline constexpr double julian_year = 3.15576e7;               // s

// e^2 / (4 pi eps0), the Gaussian-unit squared charge in J m
inline constexpr double coulomb_e2 =
    elementary_charge * elementary_charge / (4.0 * pi * epsilon0);

}  // namespace ucp::constants
