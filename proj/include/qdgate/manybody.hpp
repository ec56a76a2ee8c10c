#pragma once

#include <Eigen/Dense>
#include <array>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "qdgate/confinement.hpp"
#include "qdgate/coulomb.hpp"

namespace qdgate {

struct DipoleTable;

/// Strictly ordered index pairs (a < b) of one species.
class PairSpace {
 public:
  explicit PairSpace(int n = 0);

  int states() const { return n_; }
  std::size_t size() const { return pairs_.size(); }
  const std::array<int, 2>& operator[](std::size_t k) const { return pairs_[k]; }
  /// Index of the ordered pair (a, b), a < b; -1 if a == b.
  int index(int a, int b) const { return lookup_[static_cast<std::size_t>(a) * n_ + b]; }

 private:
  int n_;
  std::vector<std::array<int, 2>> pairs_;
  std::vector<int> lookup_;
};

/// Antisymmetrized electron-pair x hole-pair space. Coefficients multiply
/// c+_a c+_b d+_c d+_d |vac> (a < b, c < d); the unrestricted amplitude
/// Psi(a,b,c,d) over all orderings is half the pair coefficient with the
/// permutation sign, so both are normalized together.
struct BiexcitonSpace {
  PairSpace electron_pairs;
  PairSpace hole_pairs;

  BiexcitonSpace(int n_e = 0, int n_h = 0) : electron_pairs(n_e), hole_pairs(n_h) {}
  std::size_t size() const { return electron_pairs.size() * hole_pairs.size(); }
  std::size_t index(std::size_t e_pair, std::size_t h_pair) const {
    return e_pair * hole_pairs.size() + h_pair;
  }
};

enum class StateLabel { None, X0, X1, Dark, XX };

std::string_view to_string(StateLabel label);

struct ExcitonState {
  double energy = 0.0;         // meV
  Eigen::VectorXd amplitudes;  // index mu_e * N_h + nu_h
  StateLabel label = StateLabel::None;
};

struct BiexcitonState {
  double energy = 0.0;         // meV
  Eigen::VectorXd amplitudes;  // BiexcitonSpace index
  StateLabel label = StateLabel::None;
};

enum class QubitState { q00 = 0, q10 = 1, q01 = 2, q11 = 3 };

std::string_view to_string(QubitState q);

/// vac -> |00>, X0 -> |10>, X1 -> |01>, X0+X1 -> |11>; vacuum energy is zero.
struct QubitMap {
  std::size_t x0 = 0;  // exciton index
  std::size_t x1 = 0;  // exciton index
  std::size_t xx = 0;  // biexciton index
  double e_x0 = 0.0;
  double e_x1 = 0.0;
  double e_xx = 0.0;

  double delta() const { return e_x0 + e_x1 - e_xx; }
  double energy(QubitState q) const;
};

struct ManyBodySpectrum {
  int n_e = 0;
  int n_h = 0;
  std::vector<ExcitonState> excitons;      // ascending energy
  std::vector<BiexcitonState> biexcitons;  // ascending energy
  std::optional<QubitMap> qubits;

  BiexcitonSpace biexciton_space() const { return {n_e, n_h}; }
  /// E_X0 + E_X1 - E_X0+X1 from the labeled states.
  double delta() const;
};

struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // columns, ascending values
};

/// Dense symmetric eigendecomposition. Exactly decoupled diagonal blocks
/// (from symmetry zeros) are solved separately; the largest-magnitude
/// component of every eigenvector is made positive.
SymmetricEigen diagonalize_symmetric(const Eigen::MatrixXd& h);

Eigen::MatrixXd build_exciton_hamiltonian(const SingleParticleBasis& basis,
                                          const CoulombTensor& eh);

Eigen::MatrixXd build_biexciton_hamiltonian(const SingleParticleBasis& basis,
                                            const CoulombTensor& ee, const CoulombTensor& hh,
                                            const CoulombTensor& eh);

std::vector<ExcitonState> diagonalize_exciton(const Eigen::MatrixXd& h);
std::vector<BiexcitonState> diagonalize_biexciton(const Eigen::MatrixXd& h);

ManyBodySpectrum solve_manybody(const SingleParticleBasis& basis, const CoulombTensor& ee,
                                const CoulombTensor& hh, const CoulombTensor& eh);

/// Pair-space coefficients of sum A_{ac} B_{bd} c+_a d+_c c+_b d+_d |vac>
/// for two exciton-shaped amplitude arrays (index mu * N_h + nu).
Eigen::VectorXd pair_product(const Eigen::VectorXd& first, const Eigen::VectorXd& second,
                             const BiexcitonSpace& space);

/// Unrestricted amplitude Psi(a, b, c, d), index ((a * N_e + b) * N_h + c) * N_h + d.
Eigen::VectorXd expand_unrestricted(const Eigen::VectorXd& pair_amplitudes,
                                    const BiexcitonSpace& space);

/// Electron-in-shell / hole-in-shell weight of an exciton.
double shell_weight(const ExcitonState& x, const SingleParticleBasis& basis, int electron_shell,
                    int hole_shell);

struct IdentificationOptions {
  double bright_fraction = 0.01;
  double dominant_weight = 0.5;
};

struct Identification {
  QubitMap qubits;
  std::optional<std::size_t> dark_partner;  // p-shell exciton paired with X1
  std::vector<double> exciton_strengths;    // |<x|P+|vac>|^2
  double product_overlap = 0.0;             // |<X0+X1 | A(X0 x X1)>|^2
};

/// Labels X0, X1, the dark p-exciton and X0+X1 in place and stores the
/// qubit map on the spectrum.
Identification identify_states(ManyBodySpectrum& spectrum, const SingleParticleBasis& basis,
                               const DipoleTable& dipoles, const IdentificationOptions& options = {});

/// Energies, labels, delta and top-5 configuration weights of labeled states.
nlohmann::json to_json(const ManyBodySpectrum& spectrum, const SingleParticleBasis& basis);

}  // namespace qdgate
