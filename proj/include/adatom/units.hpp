#pragma once

// Internal unit system: hbar = 1, energies in meV, lengths in Angstrom,
// time in hbar/meV. Picoseconds appear only at the I/O boundary.

namespace adatom::units {

/// Reduced Planck constant (CODATA 2018) in meV*ps.
inline constexpr double hbar_meV_ps = 0.6582119569;

/// Bohr magneton in meV/T.
inline constexpr double bohr_magneton_meV_per_T = 0.05788381806;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

constexpr double to_ps(double t_internal) { return t_internal * hbar_meV_ps; }
constexpr double from_ps(double t_ps) { return t_ps / hbar_meV_ps; }

}  // namespace adatom::units
