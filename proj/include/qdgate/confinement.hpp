#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace qdgate {

enum class Species { Electron, Hole };

std::string_view to_string(Species species);

struct MaterialParams {
  double electron_mass = 0.067;       // m0
  double hole_mass = 0.38;            // m0
  double dielectric_constant = 12.9;  // relative permittivity
  double band_gap_offset = 0.0;       // meV, added to photon energies for display only

  void validate() const;
  double mass(Species species) const {
    return species == Species::Electron ? electron_mass : hole_mass;
  }
};

struct DotGeometry {
  double hbar_omega_e = 20.0;  // meV
  double hbar_omega_h = 3.5;   // meV
  double well_width_z = 5.0;   // nm

  void validate() const;
  double hbar_omega(Species species) const {
    return species == Species::Electron ? hbar_omega_e : hbar_omega_h;
  }
};

/// One level of the isotropic 2-D oscillator in Cartesian quantum numbers.
struct OscillatorLevel {
  int n_x = 0;
  int n_y = 0;
  double energy = 0.0;  // meV

  int shell() const { return n_x + n_y; }
};

/// Ground subband of the infinite square well on [0, width].
struct Subband {
  int index = 1;
  double energy = 0.0;  // meV
  double width = 0.0;   // nm

  double envelope(double z) const;
};

struct SingleParticleState {
  Species species = Species::Electron;
  int n_x = 0;
  int n_y = 0;
  int subband_z = 1;
  double energy = 0.0;              // meV, in-plane + subband
  double oscillator_length = 0.0;  // nm

  int shell() const { return n_x + n_y; }
  /// In-plane envelope phi(x, y) [nm^-1].
  double envelope(double x, double y) const;
};

struct SingleParticleBasis {
  std::vector<SingleParticleState> electrons;
  std::vector<SingleParticleState> holes;
  Subband electron_subband;
  Subband hole_subband;

  const std::vector<SingleParticleState>& states(Species species) const {
    return species == Species::Electron ? electrons : holes;
  }
  double well_width() const { return electron_subband.width; }

  /// Canonical text used to fingerprint the basis for cache keys.
  std::string fingerprint() const;
};

/// sqrt(hbar^2 / (m hbar_omega)) [nm].
double oscillator_length(double mass, double hbar_omega);

std::vector<OscillatorLevel> solve_inplane_ho(double mass, double hbar_omega, int n_levels);

Subband solve_box_z(double mass, double well_width);

SingleParticleBasis build_sp_basis(const MaterialParams& material, const DotGeometry& geometry,
                                   int n_electrons, int n_holes);

/// Normalized 1-D oscillator eigenfunction psi_n(x) for length l [nm^-1/2].
double hermite_function(int n, double x, double length);

/// psi_n(x) exp(x^2 / 2 l^2) * sqrt(l): the polynomial factor of hermite_function.
double hermite_polynomial_normalized(int n, double xi);

/// <psi_m(l1) | psi_n(l2)>, exact Gauss-Hermite quadrature.
double overlap_1d(int m, double length_m, int n, double length_n);

/// In-plane envelope overlap of two single-particle states (any species).
double inplane_overlap(const SingleParticleState& a, const SingleParticleState& b);

nlohmann::json to_json(const SingleParticleBasis& basis);

}  // namespace qdgate
