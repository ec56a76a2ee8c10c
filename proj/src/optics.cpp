#include "qdgate/optics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "qdgate/constants.hpp"
#include "qdgate/error.hpp"

namespace qdgate {

DipoleTable dipole_table(const SingleParticleBasis& basis, const ManyBodySpectrum& spectrum,
                         double mu_cv) {
  const int ne = spectrum.n_e;
  const int nh = spectrum.n_h;
  DipoleTable t;
  t.mu_cv = mu_cv;
  t.single_particle.resize(ne, nh);
  for (int mu = 0; mu < ne; ++mu)
    for (int nu = 0; nu < nh; ++nu)
      t.single_particle(mu, nu) = mu_cv * inplane_overlap(basis.electrons[mu], basis.holes[nu]);

  // Row-major flattening matches the exciton amplitude index mu * N_h + nu.
  Eigen::VectorXd m_flat(ne * nh);
  for (int mu = 0; mu < ne; ++mu)
    for (int nu = 0; nu < nh; ++nu) m_flat(mu * nh + nu) = t.single_particle(mu, nu);

  const std::size_t nx = spectrum.excitons.size();
  t.exciton.resize(nx);
  for (std::size_t x = 0; x < nx; ++x) t.exciton(x) = m_flat.dot(spectrum.excitons[x].amplitudes);

  const std::size_t nl = spectrum.biexcitons.size();
  t.biexciton = Eigen::MatrixXd::Zero(nl, nx);
  if (nl > 0) {
    const auto space = spectrum.biexciton_space();
    Eigen::MatrixXd raised(space.size(), nx);  // P+ |x> in pair coordinates
    for (std::size_t x = 0; x < nx; ++x) {
      raised.col(x) = pair_product(m_flat, spectrum.excitons[x].amplitudes, space);
    }
    Eigen::MatrixXd states(space.size(), nl);
    for (std::size_t l = 0; l < nl; ++l) states.col(l) = spectrum.biexcitons[l].amplitudes;
    t.biexciton.noalias() = states.transpose() * raised;
  }
  return t;
}

std::string_view to_string(InitialState s) {
  switch (s) {
    case InitialState::Vac: return "vac";
    case InitialState::X0: return "X0";
    case InitialState::X1: return "X1";
    case InitialState::XX: return "X0+X1";
  }
  return "?";
}

InitialState parse_initial_state(std::string_view name) {
  if (name == "vac") return InitialState::Vac;
  if (name == "X0") return InitialState::X0;
  if (name == "X1") return InitialState::X1;
  if (name == "X0+X1" || name == "XX") return InitialState::XX;
  fail(ErrorKind::Domain, "unknown initial state '" + std::string(name) + "'");
}

std::vector<SpectralLine> transition_lines(InitialState initial, const ManyBodySpectrum& spectrum,
                                           const DipoleTable& dipoles, double cutoff) {
  require(spectrum.qubits.has_value(), ErrorKind::Ordering, "spectra need identified states");
  const auto& q = *spectrum.qubits;
  const double zero = q.e_x0;
  const double threshold = cutoff * dipoles.total_strength();
  std::vector<SpectralLine> lines;
  auto add = [&](double position, double weight, std::string from, std::string to) {
    if (std::abs(weight) > threshold) {
      lines.push_back({position - zero, weight, std::move(from), std::move(to)});
    }
  };
  auto xname = [&](std::size_t x) {
    const auto l = spectrum.excitons[x].label;
    return l == StateLabel::None ? "x" + std::to_string(x) : std::string(to_string(l));
  };
  auto lname = [&](std::size_t l) {
    const auto lab = spectrum.biexcitons[l].label;
    return lab == StateLabel::None ? "b" + std::to_string(l) : std::string(to_string(lab));
  };

  switch (initial) {
    case InitialState::Vac:
      for (std::size_t x = 0; x < spectrum.excitons.size(); ++x) {
        add(spectrum.excitons[x].energy, dipoles.exciton(x) * dipoles.exciton(x), "vac", xname(x));
      }
      break;
    case InitialState::X0:
    case InitialState::X1: {
      const std::size_t i = initial == InitialState::X0 ? q.x0 : q.x1;
      const double ei = spectrum.excitons[i].energy;
      add(ei, -dipoles.exciton(i) * dipoles.exciton(i), xname(i), "vac");
      for (std::size_t l = 0; l < spectrum.biexcitons.size(); ++l) {
        const double d = dipoles.biexciton(l, i);
        add(spectrum.biexcitons[l].energy - ei, d * d, xname(i), lname(l));
      }
      break;
    }
    case InitialState::XX: {
      const double ei = spectrum.biexcitons[q.xx].energy;
      for (std::size_t x = 0; x < spectrum.excitons.size(); ++x) {
        const double d = dipoles.biexciton(q.xx, x);
        add(ei - spectrum.excitons[x].energy, -d * d, lname(q.xx), xname(x));
      }
      break;
    }
  }
  std::stable_sort(lines.begin(), lines.end(),
                   [](const SpectralLine& a, const SpectralLine& b) { return a.position < b.position; });
  return lines;
}

Spectrum absorption_spectrum(InitialState initial, const ManyBodySpectrum& spectrum,
                             const DipoleTable& dipoles, const SpectrumOptions& options) {
  require(options.hwhm > 0.0, ErrorKind::ParameterDomain, "broadening must be positive");
  require(options.step > 0.0 && options.window_max > options.window_min,
          ErrorKind::ParameterDomain, "invalid spectral window");
  Spectrum s;
  s.initial = initial;
  s.zero = spectrum.qubits ? spectrum.qubits->e_x0 : 0.0;
  for (auto& line : transition_lines(initial, spectrum, dipoles, options.line_cutoff)) {
    if (line.position >= options.window_min && line.position <= options.window_max) {
      s.lines.push_back(std::move(line));
    }
  }
  const auto n = static_cast<std::size_t>(
      std::llround((options.window_max - options.window_min) / options.step)) + 1;
  s.energy.resize(n);
  s.signal.assign(n, 0.0);
  const double g = options.hwhm;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = options.window_min + options.step * static_cast<double>(i);
    s.energy[i] = e;
    double sum = 0.0;
    for (const auto& line : s.lines) {
      const double d = e - line.position;
      sum += line.weight * g / (constants::pi * (d * d + g * g));
    }
    s.signal[i] = sum;
  }
  return s;
}

double Spectrum::integral() const {
  double sum = 0.0;
  for (std::size_t i = 1; i < energy.size(); ++i) {
    sum += 0.5 * (signal[i] + signal[i - 1]) * (energy[i] - energy[i - 1]);
  }
  return sum;
}

double Spectrum::net_line_weight() const {
  double sum = 0.0;
  for (const auto& l : lines) sum += l.weight;
  return sum;
}

// ------------------------------------------------------- conditional table

std::vector<ConditionalTransition> conditional_transition_table(
    const ManyBodySpectrum& spectrum, const DipoleTable& dipoles,
    const TransitionTableOptions& options) {
  require(spectrum.qubits.has_value(), ErrorKind::Ordering, "transition table needs labels");
  const auto& q = *spectrum.qubits;
  const double delta = q.delta();

  struct RowSpec {
    const char* name;
    double frequency;
    const char* condition;
    QubitState lower, upper;
    std::vector<QubitState> active;
  };
  using Q = QubitState;
  const std::vector<RowSpec> specs{
      {"X0", q.e_x0, "q2=0", Q::q00, Q::q10, {Q::q00, Q::q10}},
      {"X0-Delta", q.e_x0 - delta, "q2=1", Q::q01, Q::q11, {Q::q01, Q::q11}},
      {"X1", q.e_x1, "q1=0", Q::q00, Q::q01, {Q::q00, Q::q01}},
      {"X1-Delta", q.e_x1 - delta, "q1=1", Q::q10, Q::q11, {Q::q10, Q::q11}},
  };
  for (std::size_t i = 0; i < specs.size(); ++i)
    for (std::size_t j = i + 1; j < specs.size(); ++j) {
      if (std::abs(specs[i].frequency - specs[j].frequency) < options.resolution) {
        char msg[200];
        std::snprintf(msg, sizeof msg,
                      "transitions %s and %s are %.4g meV apart (< %.4g meV resolution)",
                      specs[i].name, specs[j].name, std::abs(specs[i].frequency - specs[j].frequency),
                      options.resolution);
        fail(ErrorKind::Resolution, msg);
      }
    }

  const std::array<InitialState, 4> initial_of{InitialState::Vac, InitialState::X0,
                                               InitialState::X1, InitialState::XX};
  std::array<std::vector<SpectralLine>, 4> lines;
  for (int k = 0; k < 4; ++k) {
    lines[k] = transition_lines(initial_of[k], spectrum, dipoles, options.line_cutoff);
  }
  auto strength_near = [&](QubitState from, double relative) {
    double sum = 0.0;
    for (const auto& l : lines[static_cast<int>(from)]) {
      if (std::abs(l.position - relative) < 0.5 * options.resolution) sum += std::abs(l.weight);
    }
    return sum;
  };

  std::vector<ConditionalTransition> table;
  for (const auto& spec : specs) {
    ConditionalTransition row;
    row.name = spec.name;
    row.frequency = spec.frequency;
    row.relative = spec.frequency - q.e_x0;
    row.condition = spec.condition;
    row.lower = spec.lower;
    row.upper = spec.upper;
    row.active = spec.active;
    row.active_strength = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 4; ++k) {
      const auto state = static_cast<QubitState>(k);
      const double s = strength_near(state, row.relative);
      const bool is_active =
          std::find(spec.active.begin(), spec.active.end(), state) != spec.active.end();
      if (is_active) {
        row.active_strength = std::min(row.active_strength, s);
      } else {
        row.inactive_strength = std::max(row.inactive_strength, s);
      }
    }
    row.contrast = row.inactive_strength > 0.0 ? row.active_strength / row.inactive_strength
                                               : std::numeric_limits<double>::infinity();
    row.meets_contrast = row.active_strength > 0.0 && row.contrast >= options.min_contrast;
    table.push_back(std::move(row));
  }
  return table;
}

// ------------------------------------------------------------------ export

void write_spectrum_csv(const Spectrum& s, const std::string& path) {
  std::ofstream out(path);
  require(bool(out), ErrorKind::Io, "cannot write " + path);
  out << "energy_meV,signal\n";
  char buf[64];
  for (std::size_t i = 0; i < s.energy.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f,%.12e\n", s.energy[i], s.signal[i]);
    out << buf;
  }
}

nlohmann::json to_json(const Spectrum& s) {
  nlohmann::json lines = nlohmann::json::array();
  for (const auto& l : s.lines) {
    lines.push_back({{"position_meV", l.position},
                     {"weight", l.weight},
                     {"initial", l.initial},
                     {"final", l.final}});
  }
  return {{"schema", "qdgate.lines/1"},
          {"initial_state", to_string(s.initial)},
          {"energy_zero_meV", s.zero},
          {"lines", lines}};
}

nlohmann::json to_json(const std::vector<ConditionalTransition>& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table) {
    nlohmann::json active = nlohmann::json::array();
    for (auto a : r.active) active.push_back(to_string(a));
    rows.push_back({{"transition", r.name},
                    {"frequency_meV", r.frequency},
                    {"relative_meV", r.relative},
                    {"condition", r.condition},
                    {"couples", std::string(to_string(r.lower)) + "<->" +
                                    std::string(to_string(r.upper))},
                    {"active_in", active},
                    {"active_strength", r.active_strength},
                    {"inactive_strength", r.inactive_strength},
                    {"contrast", std::isfinite(r.contrast) ? nlohmann::json(r.contrast)
                                                           : nlohmann::json("inf")},
                    {"meets_contrast", r.meets_contrast}});
  }
  return {{"schema", "qdgate.conditional/1"}, {"rows", rows}};
}

std::string four_panel_script(const std::vector<ConditionalTransition>& table,
                              const SpectrumOptions& options) {
  std::string s;
  char buf[256];
  s += "# Absorption spectra for the four qubit preparations.\n";
  s += "set terminal pngcairo size 700,1000\nset output 'spectra.png'\n";
  s += "set datafile separator ','\nset multiplot layout 4,1\n";
  std::snprintf(buf, sizeof buf, "set xrange [%g:%g]\n", options.window_min, options.window_max);
  s += buf;
  s += "set xlabel 'photon energy - E_{X0} (meV)'\nset ylabel 'absorption'\nunset key\n";
  for (const auto& r : table) {
    std::snprintf(buf, sizeof buf,
                  "set arrow from %.4f, graph 0 to %.4f, graph 1 nohead dt 2 lc rgb 'gray'\n",
                  r.relative, r.relative);
    s += buf;
    std::snprintf(buf, sizeof buf, "set label '%s (%s)' at %.4f, graph 1.05 center font ',8'\n",
                  r.name.c_str(), r.condition.c_str(), r.relative);
    s += buf;
  }
  const char* panels[4][2] = {{"vac", "(a) vacuum"},
                              {"X0", "(b) X_0"},
                              {"X1", "(c) X_1"},
                              {"X0+X1", "(d) X_0+X_1"}};
  for (const auto& p : panels) {
    std::snprintf(buf, sizeof buf,
                  "set title '%s'\nplot 'spectrum_%s.csv' every ::1 using 1:2 with lines lw 2\n",
                  p[1], p[0]);
    s += buf;
  }
  s += "unset multiplot\n";
  return s;
}

}  // namespace qdgate
