#include "qdgate/gatesim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "qdgate/constants.hpp"
#include "qdgate/kernels.hpp"

namespace qdgate {

using constants::hbar;

std::string_view to_string(Envelope e) {
  return e == Envelope::Gaussian ? "gaussian" : "rectangular";
}

Envelope parse_envelope(std::string_view name) {
  if (name == "gaussian") return Envelope::Gaussian;
  if (name == "rectangular") return Envelope::Rectangular;
  fail(ErrorKind::Domain, "unknown envelope '" + std::string(name) + "'");
}

// ------------------------------------------------------------------ Pulse

void Pulse::validate() const {
  require(std::isfinite(duration) && duration > 0.0, ErrorKind::Domain,
          "pulse duration must be positive");
  require(std::isfinite(amplitude), ErrorKind::Domain, "pulse amplitude must be finite");
  require(std::isfinite(center_time) && std::isfinite(frequency), ErrorKind::Domain,
          "pulse center and frequency must be finite");
  require(std::isfinite(reference_dipole) && reference_dipole > 0.0, ErrorKind::Domain,
          "reference dipole must be positive");
}

double Pulse::start() const {
  return envelope == Envelope::Gaussian ? center_time - kGaussianCutoff * duration
                                        : center_time - 0.5 * duration;
}

double Pulse::end() const {
  return envelope == Envelope::Gaussian ? center_time + kGaussianCutoff * duration
                                        : center_time + 0.5 * duration;
}

double Pulse::shape(double t) const {
  if (t < start() || t > end()) return 0.0;
  if (envelope == Envelope::Rectangular) return 1.0;
  const double x = (t - center_time) / duration;
  return std::exp(-0.5 * x * x);
}

double Pulse::shape_integral() const {
  if (envelope == Envelope::Rectangular) return duration;
  return duration * std::sqrt(2.0 * constants::pi) * std::erf(kGaussianCutoff / std::sqrt(2.0));
}

// ------------------------------------------------------------- DriveModel

DriveModel::DriveModel(std::vector<Manifold> manifolds, std::vector<Eigen::MatrixXd> lowering,
                       std::array<std::size_t, 4> qubit_states)
    : qubits_(qubit_states) {
  require(!manifolds.empty(), ErrorKind::Domain, "drive model needs at least one manifold");
  require(lowering.size() + 1 == manifolds.size(), ErrorKind::Domain,
          "drive model needs one coupling block per adjacent manifold pair");
  for (const auto& m : manifolds) {
    require(m.source_index.empty() || m.source_index.size() == m.energies.size(),
            ErrorKind::Domain, "manifold source indices do not match its energies");
    offsets_.push_back(energies_.size());
    sizes_.push_back(m.energies.size());
    for (std::size_t i = 0; i < m.energies.size(); ++i) {
      energies_.push_back(m.energies[i]);
      source_.push_back(m.source_index.empty() ? i : m.source_index[i]);
    }
  }
  for (std::size_t k = 0; k < lowering.size(); ++k) {
    const auto& l = lowering[k];
    require(static_cast<std::size_t>(l.rows()) == sizes_[k] &&
                static_cast<std::size_t>(l.cols()) == sizes_[k + 1],
            ErrorKind::Domain, "coupling block has the wrong shape");
    std::vector<double> rows(l.size());
    for (Eigen::Index i = 0; i < l.rows(); ++i)
      for (Eigen::Index j = 0; j < l.cols(); ++j) rows[i * l.cols() + j] = l(i, j);
    lower_rows_.push_back(std::move(rows));
  }
  for (auto q : qubits_)
    require(q < energies_.size(), ErrorKind::Domain, "qubit state index out of range");
}

DriveModel DriveModel::from_spectrum(const ManyBodySpectrum& spectrum, const DipoleTable& dipoles,
                                     double coupling_cutoff) {
  require(spectrum.qubits.has_value(), ErrorKind::Domain,
          "drive model needs labeled qubit states");
  const auto& q = *spectrum.qubits;
  const std::size_t nx = spectrum.excitons.size();
  const std::size_t nb = spectrum.biexcitons.size();
  require(static_cast<std::size_t>(dipoles.exciton.size()) == nx &&
              static_cast<std::size_t>(dipoles.biexciton.rows()) == nb &&
              static_cast<std::size_t>(dipoles.biexciton.cols()) == nx,
          ErrorKind::Domain, "dipole table does not match the spectrum");

  const double scale = std::max(dipoles.exciton.cwiseAbs().maxCoeff(),
                                nb > 0 ? dipoles.biexciton.cwiseAbs().maxCoeff() : 0.0);
  const double threshold = coupling_cutoff * scale;

  // Closure of the states reachable from the vacuum by P and P+.
  std::vector<char> keep_x(nx, 0), keep_b(nb, 0);
  for (std::size_t x = 0; x < nx; ++x) keep_x[x] = std::abs(dipoles.exciton(x)) > threshold;
  keep_x[q.x0] = keep_x[q.x1] = 1;
  keep_b[q.xx] = 1;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t b = 0; b < nb; ++b) {
      if (keep_b[b]) continue;
      for (std::size_t x = 0; x < nx; ++x)
        if (keep_x[x] && std::abs(dipoles.biexciton(b, x)) > threshold) {
          keep_b[b] = 1;
          changed = true;
          break;
        }
    }
    for (std::size_t x = 0; x < nx; ++x) {
      if (keep_x[x]) continue;
      for (std::size_t b = 0; b < nb; ++b)
        if (keep_b[b] && std::abs(dipoles.biexciton(b, x)) > threshold) {
          keep_x[x] = 1;
          changed = true;
          break;
        }
    }
  }

  Manifold vac{{0.0}, {0}}, xs, bs;
  std::array<std::size_t, 4> qubits{};
  for (std::size_t x = 0; x < nx; ++x)
    if (keep_x[x]) {
      if (x == q.x0) qubits[1] = 1 + xs.energies.size();
      if (x == q.x1) qubits[2] = 1 + xs.energies.size();
      xs.energies.push_back(spectrum.excitons[x].energy);
      xs.source_index.push_back(x);
    }
  for (std::size_t b = 0; b < nb; ++b)
    if (keep_b[b]) {
      if (b == q.xx) qubits[3] = 1 + xs.energies.size() + bs.energies.size();
      bs.energies.push_back(spectrum.biexcitons[b].energy);
      bs.source_index.push_back(b);
    }

  Eigen::MatrixXd l01(1, xs.energies.size());
  for (std::size_t i = 0; i < xs.energies.size(); ++i)
    l01(0, i) = dipoles.exciton(xs.source_index[i]);
  Eigen::MatrixXd l12(xs.energies.size(), bs.energies.size());
  for (std::size_t i = 0; i < xs.energies.size(); ++i)
    for (std::size_t j = 0; j < bs.energies.size(); ++j)
      l12(i, j) = dipoles.biexciton(bs.source_index[j], xs.source_index[i]);
  return DriveModel({vac, xs, bs}, {l01, l12}, qubits);
}

int DriveModel::manifold_of(std::size_t k) const {
  for (std::size_t m = offsets_.size(); m-- > 0;)
    if (k >= offsets_[m]) return static_cast<int>(m);
  return -1;
}

double DriveModel::polarization(std::size_t lower, std::size_t upper) const {
  const int ml = manifold_of(lower);
  const int mu = manifold_of(upper);
  if (ml < 0 || mu != ml + 1) return 0.0;
  const std::size_t i = lower - offsets_[ml];
  const std::size_t j = upper - offsets_[mu];
  return lower_rows_[ml][i * sizes_[mu] + j];
}

DriveModel DriveModel::with_energy(std::size_t k, double energy) const {
  require(k < energies_.size(), ErrorKind::Domain, "state index out of range");
  DriveModel copy = *this;
  copy.energies_[k] = energy;
  return copy;
}

DriveModel DriveModel::shifted(double offset) const {
  DriveModel copy = *this;
  for (auto& e : copy.energies_) e += offset;
  return copy;
}

Eigen::MatrixXcd DriveModel::hamiltonian(const PulseSequence& pulses, double t) const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) h(k, k) = energies_[k];
  cplx s = 0.0;
  for (const auto& p : pulses) {
    p.validate();
    s += -0.5 * p.field(t) * std::polar(1.0, p.frequency * t / hbar);
  }
  if (s == cplx(0.0)) return h;
  for (std::size_t m = 0; m + 1 < offsets_.size(); ++m)
    for (std::size_t i = 0; i < sizes_[m]; ++i)
      for (std::size_t j = 0; j < sizes_[m + 1]; ++j) {
        const double p = lower_rows_[m][i * sizes_[m + 1] + j];
        if (p == 0.0) continue;
        const auto lo = static_cast<Eigen::Index>(offsets_[m] + i);
        const auto up = static_cast<Eigen::Index>(offsets_[m + 1] + j);
        h(lo, up) += s * p;
        h(up, lo) += std::conj(s) * p;
      }
  return h;
}

void DriveModel::apply_coupling(cplx s, const double* x_re, const double* x_im, double* y_re,
                                double* y_im) const {
  std::fill(y_re, y_re + size(), 0.0);
  std::fill(y_im, y_im + size(), 0.0);
  for (std::size_t m = 0; m + 1 < offsets_.size(); ++m) {
    const std::size_t lo = offsets_[m], up = offsets_[m + 1];
    const std::size_t nl = sizes_[m], nu = sizes_[m + 1];
    if (nl == 0 || nu == 0) continue;
    kernels::hermitian_block_apply(lower_rows_[m], nl, nu, s.real(), s.imag(),
                                   {x_re + lo, x_im + lo}, {x_re + up, x_im + up},
                                   {y_re + lo, y_im + lo}, {y_re + up, y_im + up});
  }
}

// ------------------------------------------------------------ StateVector

double StateVector::leakage(const DriveModel& model) const {
  double inside = 0.0;
  for (int q = 0; q < 4; ++q) inside += population(model, static_cast<QubitState>(q));
  return std::max(0.0, amplitudes.squaredNorm() - inside);
}

StateVector StateVector::basis(const DriveModel& model, QubitState q) {
  StateVector v{Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(model.size()))};
  v.amplitudes(static_cast<Eigen::Index>(model.qubit_index(q))) = 1.0;
  return v;
}

// ------------------------------------------------------------ propagation

namespace {

// Interaction-picture amplitudes a = exp(i E t / hbar) c for a block of
// columns, stored split-complex column after column.
struct Block {
  std::size_t n = 0;
  std::size_t cols = 0;
  std::vector<double> re, im;

  Block(std::size_t n_, std::size_t cols_) : n(n_), cols(cols_), re(n_ * cols_), im(n_ * cols_) {}
  double* r(std::size_t c) { return re.data() + c * n; }
  double* i(std::size_t c) { return im.data() + c * n; }
  const double* r(std::size_t c) const { return re.data() + c * n; }
  const double* i(std::size_t c) const { return im.data() + c * n; }
};

class Stepper {
 public:
  Stepper(const DriveModel& model, const PulseSequence& pulses)
      : model_(model), pulses_(pulses), n_(model.size()), phase_re_(n_), phase_im_(n_),
        b_re_(n_), b_im_(n_), sum_re_(n_), sum_im_(n_), t_re_(n_), t_im_(n_), y_re_(n_),
        y_im_(n_) {}

  cplx field_factor(double t) const {
    cplx s = 0.0;
    for (const auto& p : pulses_) {
      const double f = p.field(t);
      if (f != 0.0) s += -0.5 * f * std::polar(1.0, p.frequency * t / hbar);
    }
    return s;
  }

  // out = exp(-i V_I(t + h/2) h / hbar) in, column by column.
  void step(const Block& in, Block& out, double t, double h) {
    const double tm = t + 0.5 * h;
    const cplx s = field_factor(tm);
    if (s == cplx(0.0)) {
      out = in;
      return;
    }
    for (std::size_t k = 0; k < n_; ++k) {
      const double ph = -model_.energy(k) * tm / hbar;
      phase_re_[k] = std::cos(ph);
      phase_im_[k] = std::sin(ph);
    }
    for (std::size_t c = 0; c < in.cols; ++c) {
      const double* ar = in.r(c);
      const double* ai = in.i(c);
      for (std::size_t k = 0; k < n_; ++k) {
        b_re_[k] = phase_re_[k] * ar[k] - phase_im_[k] * ai[k];
        b_im_[k] = phase_re_[k] * ai[k] + phase_im_[k] * ar[k];
      }
      taylor(s, h);
      double* orr = out.r(c);
      double* oi = out.i(c);
      for (std::size_t k = 0; k < n_; ++k) {
        orr[k] = phase_re_[k] * sum_re_[k] + phase_im_[k] * sum_im_[k];
        oi[k] = phase_re_[k] * sum_im_[k] - phase_im_[k] * sum_re_[k];
      }
    }
  }

 private:
  // sum = exp(-i C h / hbar) b with C = s P + conj(s) P+.
  void taylor(cplx s, double h) {
    const double ref = kernels::norm2_split(b_re_, b_im_);
    sum_re_ = b_re_;
    sum_im_ = b_im_;
    t_re_ = b_re_;
    t_im_ = b_im_;
    for (int j = 1; j <= 80; ++j) {
      model_.apply_coupling(s, t_re_.data(), t_im_.data(), y_re_.data(), y_im_.data());
      const double f = h / (hbar * j);
      for (std::size_t k = 0; k < n_; ++k) {
        t_re_[k] = f * y_im_[k];
        t_im_[k] = -f * y_re_[k];
      }
      kernels::complex_axpy_split(1.0, 0.0, t_re_, t_im_, sum_re_, sum_im_);
      if (kernels::norm2_split(t_re_, t_im_) <= 1e-30 * ref) return;
    }
    fail(ErrorKind::Numerical, "matrix exponential series did not converge");
  }

  const DriveModel& model_;
  const PulseSequence& pulses_;
  std::size_t n_;
  std::vector<double> phase_re_, phase_im_, b_re_, b_im_, sum_re_, sum_im_, t_re_, t_im_, y_re_,
      y_im_;
};

StateVector lab_state(const DriveModel& model, const Block& a, std::size_t c, double t) {
  StateVector v{Eigen::VectorXcd(static_cast<Eigen::Index>(a.n))};
  for (std::size_t k = 0; k < a.n; ++k)
    v.amplitudes(static_cast<Eigen::Index>(k)) =
        std::polar(1.0, -model.energy(k) * t / hbar) * cplx(a.r(c)[k], a.i(c)[k]);
  return v;
}

double block_leakage(const DriveModel& model, const Block& a, std::size_t c) {
  double total = kernels::norm2_split({a.r(c), a.n}, {a.i(c), a.n});
  for (int q = 0; q < 4; ++q) {
    const std::size_t k = model.qubit_index(static_cast<QubitState>(q));
    total -= a.r(c)[k] * a.r(c)[k] + a.i(c)[k] * a.i(c)[k];
  }
  return std::max(0.0, total);
}

bool pulses_active(const PulseSequence& pulses, double a, double b) {
  for (const auto& p : pulses)
    if (p.amplitude != 0.0 && p.start() < b && p.end() > a) return true;
  return false;
}

}  // namespace

Trajectory propagate(const DriveModel& model, const std::vector<StateVector>& initial,
                     const PulseSequence& pulses, double t0, double t1,
                     const PropagationOptions& options) {
  require(t1 >= t0, ErrorKind::Domain, "propagation needs t0 <= t1");
  require(!initial.empty(), ErrorKind::Domain, "no initial states");
  require(options.tolerance > 0.0 && options.min_step > 0.0 &&
              options.max_step >= options.min_step && options.initial_step > 0.0,
          ErrorKind::Domain, "invalid step control");
  for (const auto& p : pulses) p.validate();
  const std::size_t n = model.size();
  Block a(n, initial.size());
  for (std::size_t c = 0; c < initial.size(); ++c) {
    require(static_cast<std::size_t>(initial[c].amplitudes.size()) == n, ErrorKind::Domain,
            "initial state does not match the drive model");
    require(std::abs(initial[c].norm() - 1.0) < 1e-9, ErrorKind::Domain,
            "initial state is not normalized");
    for (std::size_t k = 0; k < n; ++k) {
      const cplx v = std::polar(1.0, model.energy(k) * t0 / hbar) *
                     initial[c].amplitudes(static_cast<Eigen::Index>(k));
      a.r(c)[k] = v.real();
      a.i(c)[k] = v.imag();
    }
  }

  Trajectory traj;
  traj.max_leakage.assign(initial.size(), 0.0);
  auto note_leakage = [&] {
    for (std::size_t c = 0; c < a.cols; ++c)
      traj.max_leakage[c] = std::max(traj.max_leakage[c], block_leakage(model, a, c));
  };
  auto sample = [&](double t) {
    traj.times.push_back(t);
    std::vector<StateVector> row;
    for (std::size_t c = 0; c < a.cols; ++c) row.push_back(lab_state(model, a, c, t));
    traj.samples.push_back(std::move(row));
  };
  note_leakage();

  std::vector<double> outputs;
  for (double t : options.output_times)
    if (t >= t0 && t <= t1) outputs.push_back(t);
  std::sort(outputs.begin(), outputs.end());
  std::vector<double> cuts{t0, t1};
  for (const auto& p : pulses)
    for (double t : {p.start(), p.end()})
      if (t > t0 && t < t1) cuts.push_back(t);
  cuts.insert(cuts.end(), outputs.begin(), outputs.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  Stepper stepper(model, pulses);
  Block full(n, a.cols), half(n, a.cols), two(n, a.cols);
  std::size_t next_output = 0;
  auto emit_outputs = [&](double t) {
    while (next_output < outputs.size() && outputs[next_output] <= t) {
      sample(outputs[next_output]);
      ++next_output;
    }
  };
  emit_outputs(t0);
  double h = std::min(options.initial_step, options.max_step);
  for (std::size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
    const double ta = cuts[seg], tb = cuts[seg + 1];
    if (!pulses_active(pulses, ta, tb)) {
      emit_outputs(tb);
      continue;
    }
    double t = ta;
    while (t < tb) {
      const bool last = t + h >= tb;
      const double dt = last ? tb - t : h;
      stepper.step(a, full, t, dt);
      stepper.step(a, half, t, 0.5 * dt);
      stepper.step(half, two, t + 0.5 * dt, 0.5 * dt);
      double err = 0.0;
      for (std::size_t c = 0; c < a.cols; ++c) {
        double e2 = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double dr = full.r(c)[k] - two.r(c)[k];
          const double di = full.i(c)[k] - two.i(c)[k];
          e2 += dr * dr + di * di;
        }
        err = std::max(err, std::sqrt(e2));
      }
      if (err > options.tolerance) {
        ++traj.rejected_steps;
        h = 0.5 * dt;
        if (h < options.min_step)
          fail(ErrorKind::Stiffness, "step size fell below " + std::to_string(options.min_step) +
                                         " ps at t = " + std::to_string(t) + " ps");
        continue;
      }
      ++traj.accepted_steps;
      std::swap(a, two);
      t = last ? tb : t + dt;
      note_leakage();
      if (options.record_steps && t < tb) sample(t);
      const double grow = err > 0.0 ? 0.9 * std::cbrt(options.tolerance / err) : 2.0;
      const double next = dt * std::clamp(grow, 0.2, 2.0);
      if (!last || next > h) h = std::min(next, options.max_step);
    }
    emit_outputs(tb);
  }
  emit_outputs(t1);
  for (std::size_t c = 0; c < a.cols; ++c) traj.final_state.push_back(lab_state(model, a, c, t1));
  return traj;
}

double leakage_report(const Trajectory& trajectory, const DriveModel& model) {
  double worst = 0.0;
  for (const auto& row : trajectory.samples)
    for (const auto& v : row) worst = std::max(worst, v.leakage(model));
  for (const auto& v : trajectory.final_state) worst = std::max(worst, v.leakage(model));
  return worst;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory,
                          const DriveModel& model, std::size_t column, bool amplitudes) {
  static constexpr const char* names[] = {"c00", "c10", "c01", "c11"};
  out << "time_ps";
  for (const char* nme : names) out << ",|" << nme << "|^2";
  out << ",leakage";
  if (amplitudes)
    for (const char* nme : names) out << ",re_" << nme << ",im_" << nme;
  out << '\n';
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.10e", v);
    out << buf;
  };
  for (std::size_t s = 0; s < trajectory.times.size(); ++s) {
    const auto& v = trajectory.samples[s].at(column);
    std::snprintf(buf, sizeof buf, "%.6f", trajectory.times[s]);
    out << buf;
    for (int q = 0; q < 4; ++q) put(v.population(model, static_cast<QubitState>(q)));
    put(v.leakage(model));
    if (amplitudes)
      for (int q = 0; q < 4; ++q) {
        const cplx c = v.component(model, static_cast<QubitState>(q));
        put(c.real());
        put(c.imag());
      }
    out << '\n';
  }
}

}  // namespace qdgate
