#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "qdgate/manybody.hpp"

namespace qdgate {

/// Matrix elements of the interband polarization P = sum M* d c.
struct DipoleTable {
  double mu_cv = 1.0;
  Eigen::MatrixXd single_particle;  // M_{mu_e nu_h} = mu_cv <phi_e | phi_h>
  Eigen::VectorXd exciton;          // <x | P+ | vac>
  Eigen::MatrixXd biexciton;        // <lambda | P+ | x>, rows lambda, columns x

  /// Sum of |M|^2 over all electron-hole pairs.
  double total_strength() const { return single_particle.squaredNorm(); }
};

DipoleTable dipole_table(const SingleParticleBasis& basis, const ManyBodySpectrum& spectrum,
                         double mu_cv = 1.0);

enum class InitialState { Vac, X0, X1, XX };

std::string_view to_string(InitialState s);
InitialState parse_initial_state(std::string_view name);

struct SpectralLine {
  double position = 0.0;  // meV, relative to E_X0
  double weight = 0.0;    // > 0 absorption, < 0 gain
  std::string initial;
  std::string final;
};

struct SpectrumOptions {
  double hwhm = 0.5;           // Lorentzian half width, meV
  double window_min = -20.0;   // meV relative to E_X0
  double window_max = 45.0;
  double step = 0.05;
  double line_cutoff = 1e-14;  // relative to the total single-particle strength
};

struct Spectrum {
  InitialState initial = InitialState::Vac;
  double zero = 0.0;  // E_X0, meV
  std::vector<double> energy;
  std::vector<double> signal;
  std::vector<SpectralLine> lines;

  /// Trapezoid integral of the broadened signal over the grid.
  double integral() const;
  double net_line_weight() const;
};

/// Every optical line from `initial`, without a window cut.
std::vector<SpectralLine> transition_lines(InitialState initial, const ManyBodySpectrum& spectrum,
                                           const DipoleTable& dipoles, double cutoff = 1e-14);

Spectrum absorption_spectrum(InitialState initial, const ManyBodySpectrum& spectrum,
                             const DipoleTable& dipoles, const SpectrumOptions& options = {});

struct ConditionalTransition {
  std::string name;         // "X0", "X0-Delta", ...
  double frequency = 0.0;   // absolute photon energy, meV
  double relative = 0.0;    // relative to E_X0
  std::string condition;    // "q2=0", ...
  QubitState lower;
  QubitState upper;
  std::vector<QubitState> active;
  double active_strength = 0.0;    // weakest active configuration
  double inactive_strength = 0.0;  // strongest inactive configuration
  double contrast = 0.0;
  bool meets_contrast = false;
};

struct TransitionTableOptions {
  double resolution = 2.0;     // meV: lines closer than this are one spectral feature
  double min_contrast = 1e3;
  double line_cutoff = 1e-14;
};

/// The four conditional transitions; throws a resolution error when two of
/// them fall within `resolution` of each other.
std::vector<ConditionalTransition> conditional_transition_table(
    const ManyBodySpectrum& spectrum, const DipoleTable& dipoles,
    const TransitionTableOptions& options = {});

void write_spectrum_csv(const Spectrum& s, const std::string& path);
nlohmann::json to_json(const Spectrum& s);
nlohmann::json to_json(const std::vector<ConditionalTransition>& table);

/// gnuplot script drawing the four panels from spectrum_<initial>.csv files.
std::string four_panel_script(const std::vector<ConditionalTransition>& table,
                              const SpectrumOptions& options);

}  // namespace qdgate
