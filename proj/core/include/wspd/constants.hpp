#pragma once

#include <numbers>

namespace wspd::constants {

// CODATA 2018 exact values.
inline constexpr double speed_of_light = 299'792'458.0;   // m/s
inline constexpr double planck = 6.626'070'15e-34;        // J s
inline constexpr double hc = planck * speed_of_light;     // J m

inline constexpr double vacuum_impedance = 376.730'313'668;  // ohm

inline constexpr double pi = std::numbers::pi;

/// Vacuum wavenumber k0 = 2 pi / lambda [1/m].
constexpr double wavenumber(double wavelength_m) { return 2.0 * pi / wavelength_m; }

/// Energy of one photon [J].
constexpr double photon_energy(double wavelength_m) { return hc / wavelength_m; }

}  // namespace wspd::constants
