#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qdgate/confinement.hpp"
#include "qdgate/quadrature.hpp"

namespace qdgate {

/// The tensor stores the positive kernel integrals for every kind; the
/// Hamiltonian builders attach the attractive sign to eh.
enum class CoulombKind { ee, hh, eh };

std::string_view to_string(CoulombKind kind);

/// Species carried by the (mu, mubar) and (nu, nubar) index pairs.
std::pair<Species, Species> species_of(CoulombKind kind);

struct CoulombOptions {
  int radial_nodes = 256;
  int form_factor_nodes = 64;
  double tolerance = 1e-6;  // relative, radial-node doubling self-test
  bool self_test = true;
};

/// F(q) = int int |chi(z1)|^2 |chi(z2)|^2 exp(-q |z1 - z2|) for the
/// infinite-well ground subband of width `well_width`.
class FormFactor {
 public:
  FormFactor(double well_width, int nodes = 64);
  double operator()(double q) const;
  double well_width() const { return width_; }

 private:
  double autocorrelation(double u) const;

  double width_;
  quadrature::Rule inner_;
  quadrature::Rule outer_;
};

double form_factor(double q, double well_width, int nodes = 64);

/// Transition density of two 1-D oscillator states in momentum space:
/// int psi_m(x) psi_n(x) exp(-i k x) dx = exp(-k^2 l^2 / 4) * sum_j c_j k^j.
std::vector<std::complex<double>> transition_density_poly(int m, int n, double length);

/// Precomputes the radial integrals for one basis; elements are then cheap.
class CoulombEngine {
 public:
  CoulombEngine(const SingleParticleBasis& basis, const MaterialParams& material,
                const CoulombOptions& options = {});

  /// <mu, nu | V | mubar, nubar> in meV (positive kernel, no sign).
  double element(CoulombKind kind, int mu, int nu, int mubar, int nubar) const;

  /// int_0^inf q^n exp(-s q^2) F(q) dq for the length pair of `kind`.
  double radial_integral(CoulombKind kind, int power) const;

  const FormFactor& form_factor() const { return form_factor_; }
  double prefactor() const { return prefactor_; }

 private:
  struct RadialTable {
    double s = 0.0;
    std::vector<double> integrals;
  };

  RadialTable make_table(double l1, double l2, const quadrature::Rule& rule,
                         const std::vector<double>& ff) const;
  const RadialTable& table(CoulombKind kind) const;

  const SingleParticleBasis* basis_;
  FormFactor form_factor_;
  double prefactor_;
  int max_power_;
  RadialTable ee_, hh_, eh_;
};

double coulomb_element(CoulombKind kind, int mu, int nu, int mubar, int nubar,
                       const SingleParticleBasis& basis, const MaterialParams& material,
                       const CoulombOptions& options = {});

/// Symmetry orbits of the index tuples (mu, nu, mubar, nubar): real envelopes
/// give mu <-> mubar and nu <-> nubar; same-species kinds add particle
/// exchange (mu, mubar) <-> (nu, nubar).
struct OrbitMap {
  int n_first = 0;
  int n_second = 0;
  std::vector<std::int32_t> orbit_of;            // flat tuple index -> orbit
  std::vector<std::array<int, 4>> representatives;  // canonical tuple per orbit

  std::size_t flat(int mu, int nu, int mubar, int nubar) const {
    return ((static_cast<std::size_t>(mu) * n_second + nu) * n_first + mubar) * n_second + nubar;
  }
};

OrbitMap symmetry_orbits(CoulombKind kind, int n_first, int n_second);

struct CoulombTensor {
  CoulombKind kind = CoulombKind::eh;
  std::uint64_t basis_hash = 0;
  std::uint64_t basis_id = 0;  // basis_id_of() of the generating basis
  OrbitMap orbits;
  std::vector<double> values;  // one per orbit, meV

  double operator()(int mu, int nu, int mubar, int nubar) const {
    return values[orbits.orbit_of[orbits.flat(mu, nu, mubar, nubar)]];
  }
  int n_first() const { return orbits.n_first; }
  int n_second() const { return orbits.n_second; }
};

/// Fingerprint of basis + material + quadrature settings (FNV-1a, 64 bit).
std::uint64_t basis_hash(const SingleParticleBasis& basis, const MaterialParams& material,
                         const CoulombOptions& options = {});

std::string hash_hex(std::uint64_t hash);

/// Fingerprint of the basis alone; the Hamiltonian builders compare it.
std::uint64_t basis_id_of(const SingleParticleBasis& basis);

struct TensorBuildLog {
  bool cache_hit = false;
  std::vector<std::string> warnings;
};

CoulombTensor build_coulomb_tensor(CoulombKind kind, const SingleParticleBasis& basis,
                                   const MaterialParams& material,
                                   const CoulombOptions& options = {},
                                   const std::optional<std::filesystem::path>& cache_dir = {},
                                   TensorBuildLog* log = nullptr);

/// Same orbit layout as a real tensor with every element zero.
CoulombTensor zero_tensor(CoulombKind kind, const SingleParticleBasis& basis,
                          std::uint64_t hash);

std::filesystem::path cache_file(const std::filesystem::path& dir, CoulombKind kind,
                                 std::uint64_t hash);
void write_tensor_cache(const CoulombTensor& tensor, const std::filesystem::path& path);
/// Returns nullopt (with a reason) when the file is missing or does not match.
std::optional<CoulombTensor> read_tensor_cache(const std::filesystem::path& path,
                                               CoulombKind kind, std::uint64_t hash,
                                               int n_first, int n_second,
                                               std::string* reason = nullptr);

}  // namespace qdgate
