#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <nlohmann/json.hpp>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qdgate/error.hpp"
#include "qdgate/manybody.hpp"
#include "qdgate/optics.hpp"

namespace qdgate {

using cplx = std::complex<double>;

enum class Envelope { Gaussian, Rectangular };

std::string_view to_string(Envelope e);
Envelope parse_envelope(std::string_view name);

/// The four spectrally selective transitions.
enum class GateLine { X0, X0MinusDelta, X1, X1MinusDelta };

std::string_view to_string(GateLine line);
GateLine parse_gate_line(std::string_view name);

/// Gaussian envelopes are cut where exp(-t^2 / 2 tau^2) drops below ~2e-11.
inline constexpr double kGaussianCutoff = 7.0;

struct Pulse {
  Envelope envelope = Envelope::Gaussian;
  double amplitude = 0.0;        // meV, Rabi energy M_ref * E_o for the reference transition
  double center_time = 0.0;      // ps
  double duration = 0.5;         // ps; tau for Gaussians, full length for rectangles
  double frequency = 0.0;        // meV, photon energy
  double reference_dipole = 1.0; // |M_ref|; the field is amplitude / reference_dipole
  std::optional<GateLine> line;  // transition the pulse was tuned to, if any

  void validate() const;
  /// Dimensionless envelope shape, peak 1.
  double shape(double t) const;
  /// E_o(t) in the units where the dipole scale mu_cv = 1.
  double field(double t) const { return amplitude / reference_dipole * shape(t); }
  double start() const;
  double end() const;
  /// Integral of the shape over its support [ps].
  double shape_integral() const;
};

using PulseSequence = std::vector<Pulse>;

/// Energies and polarization matrix of the many-body states the light can
/// reach: vacuum, excitons and biexcitons ordered by excitation number.
/// States with no dipole path to the computational subspace carry zero
/// amplitude forever and are left out.
class DriveModel {
 public:
  struct Manifold {
    std::vector<double> energies;
    std::vector<std::size_t> source_index;  // index in the spectrum lists
  };

  /// `lowering[k]` holds <manifold k | P | manifold k+1>.
  DriveModel(std::vector<Manifold> manifolds, std::vector<Eigen::MatrixXd> lowering,
             std::array<std::size_t, 4> qubit_states);

  static DriveModel from_spectrum(const ManyBodySpectrum& spectrum, const DipoleTable& dipoles,
                                  double coupling_cutoff = 1e-6);

  std::size_t size() const { return energies_.size(); }
  double energy(std::size_t k) const { return energies_[k]; }
  const std::vector<double>& energies() const { return energies_; }
  int manifold_of(std::size_t k) const;
  std::size_t qubit_index(QubitState q) const { return qubits_[static_cast<int>(q)]; }
  double qubit_energy(QubitState q) const { return energies_[qubit_index(q)]; }
  /// <lower | P | upper> between two local states (0 unless adjacent manifolds).
  double polarization(std::size_t lower, std::size_t upper) const;
  std::size_t manifold_count() const { return offsets_.size(); }
  std::size_t manifold_offset(std::size_t m) const { return offsets_[m]; }
  std::size_t manifold_size(std::size_t m) const { return sizes_[m]; }
  const std::vector<std::size_t>& source_indices() const { return source_; }

  /// Copy with one state's energy replaced (used for selectivity studies).
  DriveModel with_energy(std::size_t k, double energy) const;
  /// Copy with every energy shifted by a constant.
  DriveModel shifted(double offset) const;

  /// Lab-frame H(t) = diag(E) - 1/2 sum_i E_o^(i)(t) [e^{i w t} P + e^{-i w t} P+].
  Eigen::MatrixXcd hamiltonian(const PulseSequence& pulses, double t) const;

  /// y = s P x + conj(s) P+ x on split-complex vectors.
  void apply_coupling(cplx s, const double* x_re, const double* x_im, double* y_re,
                      double* y_im) const;

 private:
  std::vector<double> energies_;
  std::vector<std::size_t> source_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> sizes_;
  std::vector<std::vector<double>> lower_rows_;  // row-major <k|P|k+1>
  std::array<std::size_t, 4> qubits_{};
};

/// Amplitudes over the drive model basis.
struct StateVector {
  Eigen::VectorXcd amplitudes;

  cplx component(const DriveModel& model, QubitState q) const {
    return amplitudes(static_cast<Eigen::Index>(model.qubit_index(q)));
  }
  double population(const DriveModel& model, QubitState q) const {
    return std::norm(component(model, q));
  }
  /// Probability outside the four computational states.
  double leakage(const DriveModel& model) const;
  double norm() const { return amplitudes.norm(); }

  static StateVector basis(const DriveModel& model, QubitState q);
};

struct PropagationOptions {
  double tolerance = 1e-8;     // local error per step (step-doubling estimate)
  double min_step = 1e-6;      // ps
  double max_step = 0.05;      // ps
  double initial_step = 1e-3;  // ps
  std::vector<double> output_times;
  bool record_steps = false;   // also sample after every accepted step
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<StateVector>> samples;  // [time][column], lab frame
  std::vector<StateVector> final_state;           // lab frame at t1
  std::vector<double> max_leakage;                // per column, over accepted steps
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
};

/// Norm-preserving propagation of one or more initial states from t0 to t1.
/// Each step applies the exponential of the coupling at the step midpoint in
/// the interaction picture of the field-free energies (equivalent to the
/// lab-frame dynamics; amplitudes are reported in the lab frame).
Trajectory propagate(const DriveModel& model, const std::vector<StateVector>& initial,
                     const PulseSequence& pulses, double t0, double t1,
                     const PropagationOptions& options = {});

/// max over samples of 1 - sum_q |c_q|^2.
double leakage_report(const Trajectory& trajectory, const DriveModel& model);

/// time_ps, |c00|^2, |c10|^2, |c01|^2, |c11|^2, leakage for one column of the
/// trajectory; with `amplitudes` also the real and imaginary parts.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory,
                          const DriveModel& model, std::size_t column, bool amplitudes = false);

// ------------------------------------------------------------------- gates

struct LineInfo {
  QubitState lower;
  QubitState upper;
  double frequency;  // meV
  std::string control;  // e.g. "q2=1"
};

LineInfo line_info(GateLine line, const DriveModel& model);

struct GateOptions {
  Envelope envelope = Envelope::Gaussian;
  double tau = 0.5;                  // ps
  double amplitude_tolerance = 1e-6; // relative, transfer-maximizing amplitude search
  bool calibrate = true;             // otherwise use the analytic pulse area
  /// Also tune the carrier to the light-shifted resonance (alternating 1-D
  /// searches); off by default, the carrier then sits on the bare line.
  bool calibrate_frequency = false;
  double phase_tolerance = 0.02;     // rad
  double horizon = 100.0;            // ps of free evolution searched for readout
  double pulse_gap = 0.0;            // ps between sequenced pulse supports
  PropagationOptions propagation{};
};

/// Ratio between the gate rotation angle Omega_R T and the integrated
/// Rabi energy area / hbar: full transfer at Omega_R T = pi/2 corresponds to
/// an area of pi hbar.
inline constexpr double kRotationAngleFactor = 0.5;

struct GateReport {
  std::string name;
  Eigen::Matrix4cd unitary;   // lab frame, computational block at readout
  Eigen::Matrix4cd target;
  double fidelity = 0.0;            // |Tr(V+ U)|^2 / 16
  double transfer_fidelity = 0.0;   // mean target-population over the four inputs
  double max_leakage = 0.0;
  double max_disturbance = 0.0;     // population change of unaddressed inputs
  std::array<double, 4> final_populations_target{};  // |U_{sigma(j), j}|^2
  double readout_time = 0.0;        // ps after the first pulse start
  bool commensurable = false;
  std::array<double, 3> phase_residuals{};  // relative to column |00>
  std::array<double, 3> energy_phases{};    // E_X0 t, E_X1 t, E_XX t mod 2pi
  std::vector<double> calibrated_amplitudes;  // meV, per pulse
  std::vector<double> analytic_amplitudes;    // meV, per pulse
  double rotation_angle_factor = kRotationAngleFactor;
};

nlohmann::json to_json(const GateReport& report);

/// Thrown when no readout time satisfies the phase conditions; still carries
/// the full report and pulses.
class CommensurabilityFailure : public Error {
 public:
  CommensurabilityFailure(GateReport report, PulseSequence pulses);
  const GateReport& report() const { return report_; }
  const PulseSequence& pulses() const { return pulses_; }

 private:
  GateReport report_;
  PulseSequence pulses_;
};

/// Pulse amplitude giving a full flip (Omega_R T = pi/2) for the analytic area.
double analytic_flip_amplitude(Envelope envelope, double tau);

/// Pulse for `line` centered at `center`; amplitude from calibration (or the
/// analytic area when options.calibrate is false).
Pulse calibrate_pulse(GateLine line, const DriveModel& model, const GateOptions& options,
                      double center);

/// Ideal pulse-plus-free-evolution unitary for a C-NOT on the |01> <-> |11> pair.
Eigen::Matrix4cd ideal_cnot_unitary(double e_x0, double e_x1, double e_xx, double rotation_angle,
                                    double t);

/// Target permutations in the (|00>, |10>, |01>, |11>) ordering.
Eigen::Matrix4cd cnot_target(GateLine line);
Eigen::Matrix4cd not_target(int qubit);

double gate_fidelity(const Eigen::Matrix4cd& target, const Eigen::Matrix4cd& realized);

std::pair<PulseSequence, GateReport> synthesize_cnot(GateLine line, const DriveModel& model,
                                                     const GateOptions& options = {});

/// NOT on qubit 1 (lines X0-Delta then X0) or qubit 2 (X1-Delta then X1).
std::pair<PulseSequence, GateReport> compose_not(int qubit, const DriveModel& model,
                                                 const GateOptions& options = {});

/// Propagates the four computational inputs through `pulses` and evaluates
/// the map against `target`, searching the readout time.
GateReport evaluate_sequence(const std::string& name, const PulseSequence& pulses,
                             const Eigen::Matrix4cd& target, const DriveModel& model,
                             const GateOptions& options);

}  // namespace qdgate
