#pragma once

// CODATA 2018 values, SI. k_B, e, h are exact since the 2019 redefinition.
namespace ionbath::constants {

inline constexpr double k_boltzmann = 1.380649e-23;       // J/K
inline constexpr double hbar = 1.054571817e-34;           // J s
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg
inline constexpr double bohr_radius = 5.29177210903e-11;  // m
inline constexpr double hartree = 4.3597447222071e-18;    // J

// 1 a.u. of the C4 coefficient in V(r) = -C4/(2 r^4), i.e. E_h * a0^4.
inline constexpr double c4_atomic_unit =
    hartree * bohr_radius * bohr_radius * bohr_radius * bohr_radius;

// Masses of the species used throughout (isotope masses, u -> kg).
inline constexpr double mass_sr88 = 87.9056121 * atomic_mass_unit;
inline constexpr double mass_rb87 = 86.9091805 * atomic_mass_unit;

}  // namespace ionbath::constants
