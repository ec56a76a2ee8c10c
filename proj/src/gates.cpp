#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>

#include "qdgate/constants.hpp"
#include "qdgate/gatesim.hpp"

namespace qdgate {

using constants::hbar;
using constants::pi;

std::string_view to_string(GateLine line) {
  switch (line) {
    case GateLine::X0: return "X0";
    case GateLine::X0MinusDelta: return "X0-Delta";
    case GateLine::X1: return "X1";
    case GateLine::X1MinusDelta: return "X1-Delta";
  }
  return "?";
}

GateLine parse_gate_line(std::string_view name) {
  for (auto l : {GateLine::X0, GateLine::X0MinusDelta, GateLine::X1, GateLine::X1MinusDelta})
    if (name == to_string(l)) return l;
  fail(ErrorKind::Domain, "unknown gate line '" + std::string(name) + "'");
}

LineInfo line_info(GateLine line, const DriveModel& model) {
  LineInfo info{};
  switch (line) {
    case GateLine::X0: info = {QubitState::q00, QubitState::q10, 0.0, "q2=0"}; break;
    case GateLine::X0MinusDelta: info = {QubitState::q01, QubitState::q11, 0.0, "q2=1"}; break;
    case GateLine::X1: info = {QubitState::q00, QubitState::q01, 0.0, "q1=0"}; break;
    case GateLine::X1MinusDelta: info = {QubitState::q10, QubitState::q11, 0.0, "q1=1"}; break;
  }
  info.frequency = model.qubit_energy(info.upper) - model.qubit_energy(info.lower);
  return info;
}

CommensurabilityFailure::CommensurabilityFailure(GateReport report, PulseSequence pulses)
    : Error(ErrorKind::Commensurability,
            report.name + ": no readout time within the horizon meets the phase conditions "
                          "(best residuals " +
                std::to_string(report.phase_residuals[0]) + ", " +
                std::to_string(report.phase_residuals[1]) + ", " +
                std::to_string(report.phase_residuals[2]) + " rad)"),
      report_(std::move(report)),
      pulses_(std::move(pulses)) {}

double analytic_flip_amplitude(Envelope envelope, double tau) {
  Pulse p;
  p.envelope = envelope;
  p.duration = tau;
  p.validate();
  // Omega_R T = (1/2) A * integral(shape) / hbar = pi / 2
  return 0.5 * pi * hbar / (kRotationAngleFactor * p.shape_integral());
}

namespace {

double transfer(const DriveModel& model, const Pulse& pulse, const LineInfo& info,
                const PropagationOptions& options) {
  PropagationOptions opts = options;
  opts.output_times.clear();
  opts.record_steps = false;
  auto traj = propagate(model, {StateVector::basis(model, info.lower)}, {pulse}, pulse.start(),
                        pulse.end(), opts);
  return traj.final_state[0].population(model, info.upper);
}

double wrap_phase(double x) {
  x = std::fmod(x + pi, 2.0 * pi);
  if (x < 0.0) x += 2.0 * pi;
  return x - pi;
}

std::array<int, 4> permutation_of(const Eigen::Matrix4cd& target) {
  std::array<int, 4> sigma{};
  for (int j = 0; j < 4; ++j) {
    int row = -1;
    for (int r = 0; r < 4; ++r)
      if (std::abs(target(r, j)) > 0.5) row = r;
    require(row >= 0, ErrorKind::Domain, "gate target must be a permutation");
    sigma[j] = row;
  }
  return sigma;
}

}  // namespace

Pulse calibrate_pulse(GateLine line, const DriveModel& model, const GateOptions& options,
                      double center) {
  const LineInfo info = line_info(line, model);
  const double m = std::abs(model.polarization(model.qubit_index(info.lower),
                                               model.qubit_index(info.upper)));
  require(m > 0.0, ErrorKind::Domain,
          "transition " + std::string(to_string(line)) + " is dipole forbidden");
  Pulse p;
  p.envelope = options.envelope;
  p.duration = options.tau;
  p.center_time = center;
  p.frequency = info.frequency;
  p.reference_dipole = m;
  p.line = line;
  p.amplitude = analytic_flip_amplitude(options.envelope, options.tau);
  p.validate();
  if (!options.calibrate) return p;

  const int bits = static_cast<int>(std::ceil(-std::log2(options.amplitude_tolerance))) + 1;
  auto tune_amplitude = [&] {
    const double a0 = p.amplitude;
    auto negative_transfer = [&](double a) {
      Pulse q = p;
      q.amplitude = a;
      return -transfer(model, q, info, options.propagation);
    };
    std::uintmax_t iterations = 60;
    p.amplitude = boost::math::tools::brent_find_minima(negative_transfer, 0.7 * a0, 1.3 * a0,
                                                        bits, iterations)
                      .first;
  };
  tune_amplitude();
  if (!options.calibrate_frequency) return p;
  const double w0 = p.frequency;
  const double span = 0.5 * hbar / options.tau;
  for (int round = 0; round < 2; ++round) {
    auto negative_transfer = [&](double w) {
      Pulse q = p;
      q.frequency = w;
      return -transfer(model, q, info, options.propagation);
    };
    std::uintmax_t iterations = 60;
    p.frequency = boost::math::tools::brent_find_minima(negative_transfer, w0 - span, w0 + span,
                                                        bits, iterations)
                      .first;
    tune_amplitude();
  }
  return p;
}

Eigen::Matrix4cd ideal_cnot_unitary(double e_x0, double e_x1, double e_xx, double rotation_angle,
                                    double t) {
  const cplx i(0.0, 1.0);
  const double c = std::cos(rotation_angle), s = std::sin(rotation_angle);
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Zero();
  u(0, 0) = 1.0;
  u(1, 1) = std::exp(-i * e_x0 * t);
  u(2, 2) = std::exp(-i * e_x1 * t) * c;
  u(2, 3) = -i * std::exp(-i * e_x1 * t) * s;
  u(3, 2) = -i * std::exp(-i * e_xx * t) * s;
  u(3, 3) = std::exp(-i * e_xx * t) * c;
  return u;
}

Eigen::Matrix4cd cnot_target(GateLine line) {
  const LineInfo info = [&] {
    switch (line) {
      case GateLine::X0: return LineInfo{QubitState::q00, QubitState::q10, 0.0, {}};
      case GateLine::X0MinusDelta: return LineInfo{QubitState::q01, QubitState::q11, 0.0, {}};
      case GateLine::X1: return LineInfo{QubitState::q00, QubitState::q01, 0.0, {}};
      case GateLine::X1MinusDelta: return LineInfo{QubitState::q10, QubitState::q11, 0.0, {}};
    }
    return LineInfo{};
  }();
  Eigen::Matrix4cd v = Eigen::Matrix4cd::Identity();
  const int a = static_cast<int>(info.lower), b = static_cast<int>(info.upper);
  v(a, a) = v(b, b) = 0.0;
  v(a, b) = v(b, a) = 1.0;
  return v;
}

Eigen::Matrix4cd not_target(int qubit) {
  require(qubit == 1 || qubit == 2, ErrorKind::Domain, "qubit must be 1 or 2");
  Eigen::Matrix4cd v = Eigen::Matrix4cd::Zero();
  // index = q1 + 2 q2
  for (int j = 0; j < 4; ++j) v(j ^ (qubit == 1 ? 1 : 2), j) = 1.0;
  return v;
}

double gate_fidelity(const Eigen::Matrix4cd& target, const Eigen::Matrix4cd& realized) {
  return std::min(1.0, std::norm((target.adjoint() * realized).trace()) / 16.0);
}

GateReport evaluate_sequence(const std::string& name, const PulseSequence& pulses,
                             const Eigen::Matrix4cd& target, const DriveModel& model,
                             const GateOptions& options) {
  require(!pulses.empty(), ErrorKind::Domain, "empty pulse sequence");
  const auto sigma = permutation_of(target);
  double t_start = pulses.front().start(), t_end = pulses.front().end();
  for (const auto& p : pulses) {
    t_start = std::min(t_start, p.start());
    t_end = std::max(t_end, p.end());
  }

  std::vector<StateVector> inputs;
  for (int q = 0; q < 4; ++q) inputs.push_back(StateVector::basis(model, static_cast<QubitState>(q)));
  PropagationOptions opts = options.propagation;
  opts.record_steps = false;
  opts.output_times.clear();
  for (const auto& p : pulses) {
    opts.output_times.push_back(p.start());
    opts.output_times.push_back(p.end());
  }
  auto traj = propagate(model, inputs, pulses, t_start, t_end, opts);

  GateReport rep;
  rep.name = name;
  rep.target = target;
  rep.max_leakage = *std::max_element(traj.max_leakage.begin(), traj.max_leakage.end());
  for (const auto& p : pulses) {
    rep.calibrated_amplitudes.push_back(p.amplitude);
    rep.analytic_amplitudes.push_back(analytic_flip_amplitude(p.envelope, p.duration));
  }

  // Population change of inputs the pulse is not meant to address.
  auto sample_at = [&](double t) -> const std::vector<StateVector>& {
    for (std::size_t s = 0; s < traj.times.size(); ++s)
      if (traj.times[s] == t) return traj.samples[s];
    fail(ErrorKind::Consistency, "missing trajectory sample");
  };
  for (const auto& p : pulses) {
    if (!p.line) continue;
    const LineInfo info = line_info(*p.line, model);
    const auto& before = sample_at(p.start());
    const auto& after = sample_at(p.end());
    for (std::size_t c = 0; c < 4; ++c) {
      int dominant = 0;
      for (int q = 1; q < 4; ++q)
        if (before[c].population(model, static_cast<QubitState>(q)) >
            before[c].population(model, static_cast<QubitState>(dominant)))
          dominant = q;
      const auto qd = static_cast<QubitState>(dominant);
      if (qd == info.lower || qd == info.upper) continue;
      rep.max_disturbance = std::max(
          rep.max_disturbance,
          std::abs(after[c].population(model, qd) - before[c].population(model, qd)));
    }
  }

  Eigen::Matrix4cd u_end;
  for (int j = 0; j < 4; ++j)
    for (int r = 0; r < 4; ++r)
      u_end(r, j) = traj.final_state[j].component(model, static_cast<QubitState>(r));
  std::array<double, 4> e{};
  for (int r = 0; r < 4; ++r) e[r] = model.qubit_energy(static_cast<QubitState>(r));

  // Phases of the target entries relative to column |00>, linear in the
  // free-evolution time after the last pulse.
  std::array<double, 3> r0{}, rate{};
  const double phi0 = std::arg(u_end(sigma[0], 0));
  double fastest = 0.0;
  for (int j = 1; j < 4; ++j) {
    r0[j - 1] = std::arg(u_end(sigma[j], j)) - phi0;
    rate[j - 1] = (e[sigma[j]] - e[sigma[0]]) / hbar;
    fastest = std::max(fastest, std::abs(rate[j - 1]));
  }
  const double step = fastest > 0.0 ? options.phase_tolerance / (4.0 * fastest) : options.horizon;
  const auto count = static_cast<long long>(std::floor(options.horizon / step));
  double best_wait = 0.0, best_err = 1e300;
  std::array<double, 3> best_res{};
  for (long long k = 0; k <= count; ++k) {
    const double w = static_cast<double>(k) * step;
    double worst = 0.0;
    std::array<double, 3> res{};
    for (int j = 0; j < 3; ++j) {
      res[j] = wrap_phase(r0[j] - rate[j] * w);
      worst = std::max(worst, std::abs(res[j]));
      if (worst >= best_err && worst > options.phase_tolerance) break;
    }
    if (worst < best_err) {
      best_err = worst;
      best_wait = w;
      best_res = res;
    }
    if (best_err <= options.phase_tolerance) break;
  }
  rep.commensurable = best_err <= options.phase_tolerance;
  rep.phase_residuals = best_res;

  const double wait = best_wait;
  Eigen::Matrix4cd u = u_end;
  for (int r = 0; r < 4; ++r) u.row(r) *= std::polar(1.0, -e[r] * wait / hbar);
  rep.unitary = u;
  rep.readout_time = t_end + wait - t_start;
  rep.fidelity = gate_fidelity(target, u);
  double transfer_sum = 0.0;
  for (int j = 0; j < 4; ++j) {
    rep.final_populations_target[j] = std::norm(u(sigma[j], j));
    transfer_sum += rep.final_populations_target[j];
  }
  rep.transfer_fidelity = transfer_sum / 4.0;
  const double t_read = rep.readout_time;
  rep.energy_phases = {wrap_phase(e[1] * t_read / hbar - pi) + pi,
                       wrap_phase(e[2] * t_read / hbar - pi) + pi,
                       wrap_phase(e[3] * t_read / hbar - pi) + pi};
  return rep;
}

std::pair<PulseSequence, GateReport> synthesize_cnot(GateLine line, const DriveModel& model,
                                                     const GateOptions& options) {
  require(model.qubit_energy(QubitState::q10) + model.qubit_energy(QubitState::q01) -
                  model.qubit_energy(QubitState::q11) >
              0.0,
          ErrorKind::Domain, "conditional gates need a positive biexciton shift");
  Pulse probe;
  probe.envelope = options.envelope;
  probe.duration = options.tau;
  const double center = -probe.start();
  PulseSequence pulses{calibrate_pulse(line, model, options, center)};
  auto rep = evaluate_sequence("CNOT " + std::string(to_string(line)), pulses, cnot_target(line),
                               model, options);
  if (!rep.commensurable) throw CommensurabilityFailure(rep, pulses);
  return {pulses, rep};
}

std::pair<PulseSequence, GateReport> compose_not(int qubit, const DriveModel& model,
                                                 const GateOptions& options) {
  require(qubit == 1 || qubit == 2, ErrorKind::Domain, "qubit must be 1 or 2");
  const GateLine first = qubit == 1 ? GateLine::X0MinusDelta : GateLine::X1MinusDelta;
  const GateLine second = qubit == 1 ? GateLine::X0 : GateLine::X1;
  Pulse probe;
  probe.envelope = options.envelope;
  probe.duration = options.tau;
  const double half = -probe.start();
  const Pulse p1 = calibrate_pulse(first, model, options, half);
  const Pulse p2 = calibrate_pulse(second, model, options, p1.end() + options.pulse_gap + half);
  PulseSequence pulses{p1, p2};
  auto rep = evaluate_sequence("NOT q" + std::to_string(qubit), pulses, not_target(qubit), model,
                               options);
  if (!rep.commensurable) throw CommensurabilityFailure(rep, pulses);
  return {pulses, rep};
}

nlohmann::json to_json(const GateReport& r) {
  auto matrix = [](const Eigen::Matrix4cd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < 4; ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int j = 0; j < 4; ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
      rows.push_back(row);
    }
    return rows;
  };
  return {
      {"schema", "qdgate.gate-report/1"},
      {"name", r.name},
      {"basis", {"00", "10", "01", "11"}},
      {"unitary_re_im", matrix(r.unitary)},
      {"target_re_im", matrix(r.target)},
      {"fidelity", r.fidelity},
      {"transfer_fidelity", r.transfer_fidelity},
      {"target_populations", r.final_populations_target},
      {"max_leakage", r.max_leakage},
      {"max_disturbance", r.max_disturbance},
      {"readout_time_ps", r.readout_time},
      {"commensurable", r.commensurable},
      {"phase_residuals_rad", r.phase_residuals},
      {"energy_phases_rad", {{"E_X0_t", r.energy_phases[0]},
                             {"E_X1_t", r.energy_phases[1]},
                             {"E_XX_t", r.energy_phases[2]}}},
      {"calibrated_amplitudes_meV", r.calibrated_amplitudes},
      {"analytic_amplitudes_meV", r.analytic_amplitudes},
      {"rotation_angle_factor", r.rotation_angle_factor},
  };
}

}  // namespace qdgate
