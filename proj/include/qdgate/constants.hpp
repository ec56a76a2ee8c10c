#pragma once

#include <numbers>

// Units used throughout: energies in meV, lengths in nm, times in ps.
namespace qdgate::constants {

inline constexpr double pi = std::numbers::pi;

/// Reduced Planck constant [meV ps].
inline constexpr double hbar = 0.6582119;

/// hbar^2 / m0 [meV nm^2], m0 the free-electron mass.
inline constexpr double hbar2_over_m0 = 76.1996;

/// e^2 / (4 pi eps0) [meV nm].
inline constexpr double coulomb = 1439.96;

}  // namespace qdgate::constants
