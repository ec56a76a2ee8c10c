#include "qdgate/manybody.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>

#include "qdgate/error.hpp"
#include "qdgate/optics.hpp"

namespace qdgate {

PairSpace::PairSpace(int n) : n_(n), lookup_(static_cast<std::size_t>(n) * n, -1) {
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      lookup_[static_cast<std::size_t>(a) * n + b] = static_cast<int>(pairs_.size());
      pairs_.push_back({a, b});
    }
}

std::string_view to_string(StateLabel label) {
  switch (label) {
    case StateLabel::None: return "";
    case StateLabel::X0: return "X0";
    case StateLabel::X1: return "X1";
    case StateLabel::Dark: return "dark";
    case StateLabel::XX: return "X0+X1";
  }
  return "";
}

std::string_view to_string(QubitState q) {
  switch (q) {
    case QubitState::q00: return "00";
    case QubitState::q10: return "10";
    case QubitState::q01: return "01";
    case QubitState::q11: return "11";
  }
  return "??";
}

double QubitMap::energy(QubitState q) const {
  switch (q) {
    case QubitState::q00: return 0.0;
    case QubitState::q10: return e_x0;
    case QubitState::q01: return e_x1;
    case QubitState::q11: return e_xx;
  }
  return 0.0;
}

double ManyBodySpectrum::delta() const {
  require(qubits.has_value(), ErrorKind::Ordering, "delta requires identified states");
  const auto& q = *qubits;
  return excitons[q.x0].energy + excitons[q.x1].energy - biexcitons[q.xx].energy;
}

// ------------------------------------------------------------- eigensolver

namespace {

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

[[noreturn]] void eigen_failure(const Eigen::MatrixXd& block) {
  const auto path = std::filesystem::temp_directory_path() /
                    ("qdgate_eigen_failure_" + std::to_string(block.rows()) + ".txt");
  std::ofstream out(path);
  out.precision(17);
  out << block << '\n';
  fail(ErrorKind::Numerical, "symmetric eigensolver did not converge; matrix dumped to " +
                                 path.string());
}

}  // namespace

SymmetricEigen diagonalize_symmetric(const Eigen::MatrixXd& h) {
  require(h.rows() == h.cols(), ErrorKind::Domain, "matrix must be square");
  const int n = static_cast<int>(h.rows());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < j; ++i)
      if (h(i, j) != 0.0) {
        const int ri = find_root(parent, i);
        const int rj = find_root(parent, j);
        if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
      }
  std::vector<std::vector<int>> blocks;
  std::vector<int> block_of_root(n, -1);
  for (int i = 0; i < n; ++i) {
    const int r = find_root(parent, i);
    if (block_of_root[r] < 0) {
      block_of_root[r] = static_cast<int>(blocks.size());
      blocks.emplace_back();
    }
    blocks[block_of_root[r]].push_back(i);
  }

  struct Pair {
    double value;
    int block;
    int column;
  };
  std::vector<Pair> order;
  std::vector<Eigen::MatrixXd> block_vectors(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& idx = blocks[b];
    const int m = static_cast<int>(idx.size());
    Eigen::MatrixXd sub(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) sub(i, j) = h(idx[i], idx[j]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sub);
    if (solver.info() != Eigen::Success) eigen_failure(sub);
    block_vectors[b] = solver.eigenvectors();
    for (int k = 0; k < m; ++k) order.push_back({solver.eigenvalues()(k), int(b), k});
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const Pair& a, const Pair& b) { return a.value < b.value; });

  SymmetricEigen out;
  out.values.resize(n);
  out.vectors = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const auto& p = order[k];
    const auto& idx = blocks[p.block];
    out.values(k) = p.value;
    const auto col = block_vectors[p.block].col(p.column);
    int arg = 0;
    for (int i = 1; i < col.size(); ++i)
      if (std::abs(col(i)) > std::abs(col(arg)) * (1.0 + 1e-12)) arg = i;
    const double sign = col(arg) < 0.0 ? -1.0 : 1.0;
    for (int i = 0; i < col.size(); ++i) out.vectors(idx[i], k) = sign * col(i);
  }
  return out;
}

// ------------------------------------------------------------- Hamiltonians

namespace {

void check_tensor(const CoulombTensor& t, CoulombKind kind, const SingleParticleBasis& basis) {
  const auto [first, second] = species_of(kind);
  const int n_first = static_cast<int>(basis.states(first).size());
  const int n_second = static_cast<int>(basis.states(second).size());
  require(t.kind == kind, ErrorKind::Consistency,
          "expected a " + std::string(to_string(kind)) + " tensor");
  require(t.basis_id == basis_id_of(basis), ErrorKind::Consistency,
          std::string(to_string(kind)) + " Coulomb tensor was built for a different basis");
  require(t.n_first() == n_first && t.n_second() == n_second, ErrorKind::Consistency,
          "Coulomb tensor dimensions do not match the basis");
}

}  // namespace

Eigen::MatrixXd build_exciton_hamiltonian(const SingleParticleBasis& basis,
                                          const CoulombTensor& eh) {
  const int ne = static_cast<int>(basis.electrons.size());
  const int nh = static_cast<int>(basis.holes.size());
  check_tensor(eh, CoulombKind::eh, basis);
  const int dim = ne * nh;
  Eigen::MatrixXd h(dim, dim);
  for (int mu = 0; mu < ne; ++mu)
    for (int nu = 0; nu < nh; ++nu) {
      const int row = mu * nh + nu;
      for (int mub = 0; mub < ne; ++mub)
        for (int nub = 0; nub < nh; ++nub) {
          const int col = mub * nh + nub;
          if (col < row) continue;
          double v = -eh(mu, nu, mub, nub);
          if (row == col) v += basis.electrons[mu].energy + basis.holes[nu].energy;
          h(row, col) = v;
          h(col, row) = v;
        }
    }
  return h;
}

Eigen::MatrixXd build_biexciton_hamiltonian(const SingleParticleBasis& basis,
                                            const CoulombTensor& ee, const CoulombTensor& hh,
                                            const CoulombTensor& eh) {
  const int ne = static_cast<int>(basis.electrons.size());
  const int nh = static_cast<int>(basis.holes.size());
  check_tensor(ee, CoulombKind::ee, basis);
  check_tensor(hh, CoulombKind::hh, basis);
  check_tensor(eh, CoulombKind::eh, basis);
  require(ee.basis_hash == hh.basis_hash && ee.basis_hash == eh.basis_hash,
          ErrorKind::Consistency, "Coulomb tensors come from different bases");
  const BiexcitonSpace space(ne, nh);
  const auto& ep = space.electron_pairs;
  const auto& hp = space.hole_pairs;
  const int dim = static_cast<int>(space.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);

  // Unrestricted eh kernel between (a,b,c,d) and (a',b',c',d').
  auto eh_kernel = [&](int a, int b, int c, int d, int a2, int b2, int c2, int d2) {
    double k = 0.0;
    if (b == b2 && d == d2) k += eh(a, c, a2, c2);
    if (b == b2 && c == c2) k += eh(a, d, a2, d2);
    if (a == a2 && d == d2) k += eh(b, c, b2, c2);
    if (a == a2 && c == c2) k += eh(b, d, b2, d2);
    return k;
  };

  for (std::size_t E = 0; E < ep.size(); ++E) {
    const auto [a, b] = ep[E];
    for (std::size_t H = 0; H < hp.size(); ++H) {
      const auto [c, d] = hp[H];
      const int row = static_cast<int>(space.index(E, H));
      for (std::size_t E2 = 0; E2 < ep.size(); ++E2) {
        const auto [a2, b2] = ep[E2];
        for (std::size_t H2 = 0; H2 < hp.size(); ++H2) {
          const int col = static_cast<int>(space.index(E2, H2));
          if (col < row) continue;
          const auto [c2, d2] = hp[H2];
          double v = 0.0;
          if (E == E2 && H == H2) {
            // summed as two electron-hole pairs so the free limit gives delta = 0 exactly
            v += (basis.electrons[a].energy + basis.holes[c].energy) +
                 (basis.electrons[b].energy + basis.holes[d].energy);
          }
          if (H == H2) v += ee(a, b, a2, b2) - ee(a, b, b2, a2);
          if (E == E2) v += hh(c, d, c2, d2) - hh(c, d, d2, c2);
          // Attractive eh terms, antisymmetrized over the ket orderings.
          v -= eh_kernel(a, b, c, d, a2, b2, c2, d2) - eh_kernel(a, b, c, d, b2, a2, c2, d2) -
               eh_kernel(a, b, c, d, a2, b2, d2, c2) + eh_kernel(a, b, c, d, b2, a2, d2, c2);
          h(row, col) = v;
          h(col, row) = v;
        }
      }
    }
  }
  return h;
}

std::vector<ExcitonState> diagonalize_exciton(const Eigen::MatrixXd& h) {
  const auto eig = diagonalize_symmetric(h);
  std::vector<ExcitonState> out(eig.values.size());
  for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
    out[k].energy = eig.values(k);
    out[k].amplitudes = eig.vectors.col(k);
  }
  return out;
}

std::vector<BiexcitonState> diagonalize_biexciton(const Eigen::MatrixXd& h) {
  const auto eig = diagonalize_symmetric(h);
  std::vector<BiexcitonState> out(eig.values.size());
  for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
    out[k].energy = eig.values(k);
    out[k].amplitudes = eig.vectors.col(k);
  }
  return out;
}

ManyBodySpectrum solve_manybody(const SingleParticleBasis& basis, const CoulombTensor& ee,
                                const CoulombTensor& hh, const CoulombTensor& eh) {
  ManyBodySpectrum spectrum;
  spectrum.n_e = static_cast<int>(basis.electrons.size());
  spectrum.n_h = static_cast<int>(basis.holes.size());
  spectrum.excitons = diagonalize_exciton(build_exciton_hamiltonian(basis, eh));
  if (spectrum.n_e >= 2 && spectrum.n_h >= 2) {
    spectrum.biexcitons = diagonalize_biexciton(build_biexciton_hamiltonian(basis, ee, hh, eh));
  }
  return spectrum;
}

// ------------------------------------------------------------ pair algebra

Eigen::VectorXd pair_product(const Eigen::VectorXd& first, const Eigen::VectorXd& second,
                             const BiexcitonSpace& space) {
  const int nh = space.hole_pairs.states();
  auto A = [&](int e, int h) { return first(e * nh + h); };
  auto B = [&](int e, int h) { return second(e * nh + h); };
  Eigen::VectorXd out(space.size());
  for (std::size_t E = 0; E < space.electron_pairs.size(); ++E) {
    const auto [a, b] = space.electron_pairs[E];
    for (std::size_t H = 0; H < space.hole_pairs.size(); ++H) {
      const auto [c, d] = space.hole_pairs[H];
      // c+_a d+_c c+_b d+_d = -c+_a c+_b d+_c d+_d
      out(space.index(E, H)) =
          -(A(a, c) * B(b, d) - A(b, c) * B(a, d) - A(a, d) * B(b, c) + A(b, d) * B(a, c));
    }
  }
  return out;
}

Eigen::VectorXd expand_unrestricted(const Eigen::VectorXd& pair_amplitudes,
                                    const BiexcitonSpace& space) {
  const int ne = space.electron_pairs.states();
  const int nh = space.hole_pairs.states();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ne) * ne * nh * nh);
  auto at = [&](int a, int b, int c, int d) -> double& {
    return out(((static_cast<Eigen::Index>(a) * ne + b) * nh + c) * nh + d);
  };
  for (std::size_t E = 0; E < space.electron_pairs.size(); ++E) {
    const auto [a, b] = space.electron_pairs[E];
    for (std::size_t H = 0; H < space.hole_pairs.size(); ++H) {
      const auto [c, d] = space.hole_pairs[H];
      const double v = 0.5 * pair_amplitudes(space.index(E, H));
      at(a, b, c, d) = v;
      at(b, a, c, d) = -v;
      at(a, b, d, c) = -v;
      at(b, a, d, c) = v;
    }
  }
  return out;
}

double shell_weight(const ExcitonState& x, const SingleParticleBasis& basis, int electron_shell,
                    int hole_shell) {
  const int nh = static_cast<int>(basis.holes.size());
  double w = 0.0;
  for (std::size_t mu = 0; mu < basis.electrons.size(); ++mu) {
    if (basis.electrons[mu].shell() != electron_shell) continue;
    for (int nu = 0; nu < nh; ++nu) {
      if (basis.holes[nu].shell() != hole_shell) continue;
      const double c = x.amplitudes(static_cast<Eigen::Index>(mu) * nh + nu);
      w += c * c;
    }
  }
  return w;
}

// ----------------------------------------------------------- identification

Identification identify_states(ManyBodySpectrum& spectrum, const SingleParticleBasis& basis,
                               const DipoleTable& dipoles, const IdentificationOptions& options) {
  require(!spectrum.excitons.empty() && !spectrum.biexcitons.empty(), ErrorKind::Ordering,
          "identification needs both exciton and biexciton spectra");
  const std::size_t nx = spectrum.excitons.size();
  Identification id;
  id.exciton_strengths.resize(nx);
  double f_max = 0.0;
  for (std::size_t x = 0; x < nx; ++x) {
    id.exciton_strengths[x] = dipoles.exciton(x) * dipoles.exciton(x);
    f_max = std::max(f_max, id.exciton_strengths[x]);
  }
  auto strengths_report = [&] {
    std::string s = "exciton oscillator strengths:";
    char buf[96];
    for (std::size_t x = 0; x < std::min<std::size_t>(nx, 30); ++x) {
      std::snprintf(buf, sizeof buf, " [%zu] E=%.4f f=%.3e p=%.3f", x, spectrum.excitons[x].energy,
                    id.exciton_strengths[x], shell_weight(spectrum.excitons[x], basis, 1, 1));
      s += buf;
    }
    return s;
  };
  require(f_max > 0.0, ErrorKind::IdentificationFailed, "no optically active exciton");

  std::size_t x0 = nx;
  for (std::size_t x = 0; x < nx && x0 == nx; ++x)
    if (id.exciton_strengths[x] >= options.bright_fraction * f_max) x0 = x;
  const double f_x0 = id.exciton_strengths[x0];

  std::size_t x1 = nx;
  for (std::size_t x = x0 + 1; x < nx && x1 == nx; ++x) {
    if (id.exciton_strengths[x] >= options.bright_fraction * f_x0 &&
        shell_weight(spectrum.excitons[x], basis, 1, 1) >= options.dominant_weight) {
      x1 = x;
    }
  }
  if (x1 == nx) {
    fail(ErrorKind::IdentificationFailed, "no bright p-shell exciton; " + strengths_report());
  }

  // Dark partner: the other dominant p-shell exciton closest to X1.
  double best_gap = 0.0;
  for (std::size_t x = 0; x < nx; ++x) {
    if (x == x1 || shell_weight(spectrum.excitons[x], basis, 1, 1) < options.dominant_weight) {
      continue;
    }
    const double gap = std::abs(spectrum.excitons[x].energy - spectrum.excitons[x1].energy);
    if (!id.dark_partner || gap < best_gap) {
      id.dark_partner = x;
      best_gap = gap;
    }
  }

  const auto space = spectrum.biexciton_space();
  Eigen::VectorXd product = pair_product(spectrum.excitons[x0].amplitudes,
                                         spectrum.excitons[x1].amplitudes, space);
  product.normalize();
  const double f_x1 = id.exciton_strengths[x1];
  std::size_t xx = spectrum.biexcitons.size();
  double best = -1.0;
  for (std::size_t l = 0; l < spectrum.biexcitons.size(); ++l) {
    const double from_x0 = dipoles.biexciton(l, x0) * dipoles.biexciton(l, x0);
    const double from_x1 = dipoles.biexciton(l, x1) * dipoles.biexciton(l, x1);
    if (from_x0 < options.bright_fraction * f_x1 || from_x1 < options.bright_fraction * f_x0) {
      continue;
    }
    const double ov = spectrum.biexcitons[l].amplitudes.dot(product);
    if (ov * ov > best) {
      best = ov * ov;
      xx = l;
    }
  }
  if (xx == spectrum.biexcitons.size()) {
    fail(ErrorKind::IdentificationFailed, "no biexciton optically connected to both X0 and X1");
  }
  id.product_overlap = best;

  for (auto& x : spectrum.excitons) x.label = StateLabel::None;
  for (auto& l : spectrum.biexcitons) l.label = StateLabel::None;
  spectrum.excitons[x0].label = StateLabel::X0;
  spectrum.excitons[x1].label = StateLabel::X1;
  if (id.dark_partner) spectrum.excitons[*id.dark_partner].label = StateLabel::Dark;
  spectrum.biexcitons[xx].label = StateLabel::XX;

  QubitMap q;
  q.x0 = x0;
  q.x1 = x1;
  q.xx = xx;
  q.e_x0 = spectrum.excitons[x0].energy;
  q.e_x1 = spectrum.excitons[x1].energy;
  q.e_xx = spectrum.biexcitons[xx].energy;
  spectrum.qubits = q;
  id.qubits = q;
  return id;
}

// ------------------------------------------------------------------ export

namespace {

std::string orbital(const SingleParticleState& s) {
  return std::to_string(s.n_x) + "," + std::to_string(s.n_y);
}

nlohmann::json top_configs(const Eigen::VectorXd& amps, std::size_t count,
                           const std::function<std::string(std::size_t)>& describe) {
  std::vector<std::size_t> idx(amps.size());
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t k = std::min(count, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](std::size_t a, std::size_t b) {
    const double wa = amps(a) * amps(a);
    const double wb = amps(b) * amps(b);
    return wa != wb ? wa > wb : a < b;
  });
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t i = 0; i < k; ++i) {
    arr.push_back({{"configuration", describe(idx[i])}, {"weight", amps(idx[i]) * amps(idx[i])}});
  }
  return arr;
}

}  // namespace

nlohmann::json to_json(const ManyBodySpectrum& spectrum, const SingleParticleBasis& basis) {
  const int nh = spectrum.n_h;
  const auto space = spectrum.biexciton_space();
  auto exciton_config = [&](std::size_t i) {
    return "e(" + orbital(basis.electrons[i / nh]) + ") h(" + orbital(basis.holes[i % nh]) + ")";
  };
  auto biexciton_config = [&](std::size_t i) {
    const auto [a, b] = space.electron_pairs[i / space.hole_pairs.size()];
    const auto [c, d] = space.hole_pairs[i % space.hole_pairs.size()];
    return "e(" + orbital(basis.electrons[a]) + ";" + orbital(basis.electrons[b]) + ") h(" +
           orbital(basis.holes[c]) + ";" + orbital(basis.holes[d]) + ")";
  };
  nlohmann::json doc;
  doc["schema"] = "qdgate.spectrum/1";
  doc["units"] = "meV";
  auto& xs = doc["excitons"] = nlohmann::json::array();
  for (const auto& x : spectrum.excitons) {
    nlohmann::json e{{"energy_meV", x.energy}};
    if (x.label != StateLabel::None) {
      e["label"] = to_string(x.label);
      e["configurations"] = top_configs(x.amplitudes, 5, exciton_config);
    }
    xs.push_back(std::move(e));
  }
  auto& bs = doc["biexcitons"] = nlohmann::json::array();
  for (const auto& l : spectrum.biexcitons) {
    nlohmann::json e{{"energy_meV", l.energy}};
    if (l.label != StateLabel::None) {
      e["label"] = to_string(l.label);
      e["configurations"] = top_configs(l.amplitudes, 5, biexciton_config);
    }
    bs.push_back(std::move(e));
  }
  if (spectrum.qubits) {
    const auto& q = *spectrum.qubits;
    doc["qubits"] = {{"vac", {{"index", nullptr}, {"energy_meV", 0.0}, {"qubit", "00"}}},
                     {"X0", {{"index", q.x0}, {"energy_meV", q.e_x0}, {"qubit", "10"}}},
                     {"X1", {{"index", q.x1}, {"energy_meV", q.e_x1}, {"qubit", "01"}}},
                     {"X0+X1", {{"index", q.xx}, {"energy_meV", q.e_xx}, {"qubit", "11"}}}};
    doc["delta_meV"] = spectrum.delta();
  }
  return doc;
}

}  // namespace qdgate
