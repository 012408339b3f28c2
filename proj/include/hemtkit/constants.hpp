#pragma once

// Physical constants (CODATA 2018, SI unless noted).
namespace hemtkit::constants {

inline constexpr double kB = 1.380649e-23;        // Boltzmann constant, J/K
inline constexpr double q = 1.602176634e-19;      // elementary charge, C
inline constexpr double eps0 = 8.8541878128e-12;  // vacuum permittivity, F/m
inline constexpr double m_e = 9.1093837015e-31;   // electron rest mass, kg
inline constexpr double hbar = 1.054571817e-34;   // reduced Planck constant, J*s
inline constexpr double h_planck = 6.62607015e-34;// Planck constant, J*s

// Thermal voltage kT/q in volts.
inline double thermal_voltage(double temperature_K) {
    return kB * temperature_K / q;
}

}  // namespace hemtkit::constants
