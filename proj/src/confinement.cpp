#include "qdgate/confinement.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "qdgate/constants.hpp"
#include "qdgate/error.hpp"
#include "qdgate/quadrature.hpp"

namespace qdgate {

std::string_view to_string(Species species) {
  return species == Species::Electron ? "electron" : "hole";
}

void MaterialParams::validate() const {
  require(electron_mass > 0.0 && hole_mass > 0.0, ErrorKind::ParameterDomain,
          "effective masses must be positive");
  require(dielectric_constant >= 1.0, ErrorKind::ParameterDomain,
          "dielectric constant must be >= 1");
}

void DotGeometry::validate() const {
  require(hbar_omega_e > 0.0 && hbar_omega_h > 0.0, ErrorKind::ParameterDomain,
          "confinement energies must be positive");
  require(well_width_z > 0.0, ErrorKind::ParameterDomain, "well width must be positive");
}

double Subband::envelope(double z) const {
  if (z < 0.0 || z > width) return 0.0;
  return std::sqrt(2.0 / width) * std::sin(index * constants::pi * z / width);
}

double hermite_polynomial_normalized(int n, double xi) {
  double prev = 0.0;
  double cur = std::pow(constants::pi, -0.25);
  for (int k = 0; k < n; ++k) {
    const double next = std::sqrt(2.0 / (k + 1)) * xi * cur - std::sqrt(double(k) / (k + 1)) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double hermite_function(int n, double x, double length) {
  const double xi = x / length;
  return hermite_polynomial_normalized(n, xi) * std::exp(-0.5 * xi * xi) / std::sqrt(length);
}

double SingleParticleState::envelope(double x, double y) const {
  return hermite_function(n_x, x, oscillator_length) * hermite_function(n_y, y, oscillator_length);
}

double oscillator_length(double mass, double hbar_omega) {
  require(mass > 0.0 && hbar_omega > 0.0, ErrorKind::ParameterDomain,
          "oscillator length needs positive mass and confinement energy");
  return std::sqrt(constants::hbar2_over_m0 / (mass * hbar_omega));
}

std::vector<OscillatorLevel> solve_inplane_ho(double mass, double hbar_omega, int n_levels) {
  require(mass > 0.0, ErrorKind::ParameterDomain, "mass must be positive");
  require(hbar_omega > 0.0, ErrorKind::ParameterDomain, "hbar_omega must be positive");
  require(n_levels >= 1, ErrorKind::ParameterDomain, "need at least one level");
  std::vector<OscillatorLevel> levels;
  // Whole shells first; within a shell n_x runs downward.
  for (int shell = 0; static_cast<int>(levels.size()) < n_levels; ++shell) {
    for (int nx = shell; nx >= 0; --nx) {
      levels.push_back({nx, shell - nx, hbar_omega * (shell + 1)});
    }
  }
  levels.resize(n_levels);
  return levels;
}

Subband solve_box_z(double mass, double well_width) {
  require(mass > 0.0, ErrorKind::ParameterDomain, "mass must be positive");
  require(well_width > 0.0, ErrorKind::ParameterDomain, "well width must be positive");
  Subband sb;
  sb.index = 1;
  sb.width = well_width;
  sb.energy = constants::pi * constants::pi * constants::hbar2_over_m0 /
              (2.0 * mass * well_width * well_width);
  return sb;
}

namespace {

std::vector<SingleParticleState> species_states(Species species, double mass, double hbar_omega,
                                                const Subband& subband, int n) {
  const double length = oscillator_length(mass, hbar_omega);
  std::vector<SingleParticleState> out;
  for (const auto& level : solve_inplane_ho(mass, hbar_omega, n)) {
    SingleParticleState s;
    s.species = species;
    s.n_x = level.n_x;
    s.n_y = level.n_y;
    s.subband_z = subband.index;
    s.energy = level.energy + subband.energy;
    s.oscillator_length = length;
    out.push_back(s);
  }
  return out;
}

}  // namespace

SingleParticleBasis build_sp_basis(const MaterialParams& material, const DotGeometry& geometry,
                                   int n_electrons, int n_holes) {
  material.validate();
  geometry.validate();
  require(n_electrons >= 1 && n_holes >= 1, ErrorKind::ParameterDomain,
          "basis sizes must be >= 1");
  SingleParticleBasis basis;
  basis.electron_subband = solve_box_z(material.electron_mass, geometry.well_width_z);
  basis.hole_subband = solve_box_z(material.hole_mass, geometry.well_width_z);
  basis.electrons = species_states(Species::Electron, material.electron_mass,
                                   geometry.hbar_omega_e, basis.electron_subband, n_electrons);
  basis.holes = species_states(Species::Hole, material.hole_mass, geometry.hbar_omega_h,
                               basis.hole_subband, n_holes);
  return basis;
}

double overlap_1d(int m, double length_m, int n, double length_n) {
  // psi_m psi_n = poly(x) exp(-a x^2), a = (1/l1^2 + 1/l2^2) / 2.
  const double a = 0.5 * (1.0 / (length_m * length_m) + 1.0 / (length_n * length_n));
  const double scale = 1.0 / std::sqrt(a);
  const auto rule = quadrature::gauss_hermite((m + n) / 2 + 2);
  double sum = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const double x = rule.nodes[k] * scale;
    sum += rule.weights[k] * hermite_polynomial_normalized(m, x / length_m) *
           hermite_polynomial_normalized(n, x / length_n);
  }
  return sum * scale / std::sqrt(length_m * length_n);
}

double inplane_overlap(const SingleParticleState& a, const SingleParticleState& b) {
  return overlap_1d(a.n_x, a.oscillator_length, b.n_x, b.oscillator_length) *
         overlap_1d(a.n_y, a.oscillator_length, b.n_y, b.oscillator_length);
}

std::string SingleParticleBasis::fingerprint() const {
  std::string out;
  char buf[160];
  auto add = [&](const SingleParticleState& s) {
    std::snprintf(buf, sizeof buf, "%c%d,%d,%d,%a,%a;", s.species == Species::Electron ? 'e' : 'h',
                  s.n_x, s.n_y, s.subband_z, s.energy, s.oscillator_length);
    out += buf;
  };
  for (const auto& s : electrons) add(s);
  for (const auto& s : holes) add(s);
  std::snprintf(buf, sizeof buf, "w%a", well_width());
  out += buf;
  return out;
}

nlohmann::json to_json(const SingleParticleBasis& basis) {
  auto states = [](const std::vector<SingleParticleState>& list) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : list) {
      arr.push_back({{"n_x", s.n_x},
                     {"n_y", s.n_y},
                     {"subband_z", s.subband_z},
                     {"energy_meV", s.energy},
                     {"oscillator_length_nm", s.oscillator_length}});
    }
    return arr;
  };
  return {{"schema", "qdgate.basis/1"},
          {"well_width_nm", basis.well_width()},
          {"electron_subband_energy_meV", basis.electron_subband.energy},
          {"hole_subband_energy_meV", basis.hole_subband.energy},
          {"electrons", states(basis.electrons)},
          {"holes", states(basis.holes)}};
}

}  // namespace qdgate
