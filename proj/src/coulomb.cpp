#include "qdgate/coulomb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "qdgate/constants.hpp"
#include "qdgate/error.hpp"
#include "qdgate/kernels.hpp"

namespace qdgate {

std::string_view to_string(CoulombKind kind) {
  switch (kind) {
    case CoulombKind::ee: return "ee";
    case CoulombKind::hh: return "hh";
    case CoulombKind::eh: return "eh";
  }
  return "?";
}

std::pair<Species, Species> species_of(CoulombKind kind) {
  switch (kind) {
    case CoulombKind::ee: return {Species::Electron, Species::Electron};
    case CoulombKind::hh: return {Species::Hole, Species::Hole};
    case CoulombKind::eh: return {Species::Electron, Species::Hole};
  }
  return {Species::Electron, Species::Hole};
}

// ---------------------------------------------------------------- form factor

FormFactor::FormFactor(double well_width, int nodes)
    : width_(well_width),
      inner_(quadrature::gauss_legendre(nodes, 0.0, 1.0)),
      outer_(quadrature::gauss_legendre(nodes, 0.0, 1.0)) {
  require(well_width > 0.0, ErrorKind::ParameterDomain, "well width must be positive");
}

double FormFactor::autocorrelation(double u) const {
  // C(u) = int_0^{L-u} rho(z) rho(z+u) dz, rho = (2/L) sin^2(pi z / L).
  const double span = width_ - u;
  if (span <= 0.0) return 0.0;
  const double k = constants::pi / width_;
  double sum = 0.0;
  for (std::size_t i = 0; i < inner_.size(); ++i) {
    const double z = span * inner_.nodes[i];
    const double a = std::sin(k * z);
    const double b = std::sin(k * (z + u));
    sum += inner_.weights[i] * a * a * b * b;
  }
  return sum * span * 4.0 / (width_ * width_);
}

double FormFactor::operator()(double q) const {
  require(q >= 0.0, ErrorKind::ParameterDomain, "form factor needs q >= 0");
  // F(q) = 2 int_0^L exp(-q u) C(u) du; with w = (1 - exp(-q u)) / q the
  // exponential is absorbed into the measure.
  double sum = 0.0;
  if (q * width_ < 1e-12) {
    for (std::size_t i = 0; i < outer_.size(); ++i) {
      sum += outer_.weights[i] * width_ * autocorrelation(width_ * outer_.nodes[i]);
    }
    return 2.0 * sum;
  }
  const double w_max = -std::expm1(-q * width_) / q;
  for (std::size_t i = 0; i < outer_.size(); ++i) {
    const double w = w_max * outer_.nodes[i];
    const double u = -std::log1p(-q * w) / q;
    sum += outer_.weights[i] * w_max * autocorrelation(u);
  }
  return 2.0 * sum;
}

double form_factor(double q, double well_width, int nodes) {
  return FormFactor(well_width, nodes)(q);
}

// ------------------------------------------------------- transition densities

std::vector<std::complex<double>> transition_density_poly(int m, int n, double length) {
  const int lo = std::min(m, n);
  const int hi = std::max(m, n);
  const int d = hi - lo;
  std::vector<std::complex<double>> poly(d + 2 * lo + 1, 0.0);
  // sqrt(lo!/hi!) (-i l / sqrt2)^d L_lo^(d)(k^2 l^2 / 2)
  const double norm = std::exp(0.5 * (std::lgamma(lo + 1.0) - std::lgamma(hi + 1.0)));
  std::complex<double> lead = norm;
  const std::complex<double> step(0.0, -length / std::sqrt(2.0));
  for (int i = 0; i < d; ++i) lead *= step;
  const double y = 0.5 * length * length;
  for (int j = 0; j <= lo; ++j) {
    const double binom =
        std::exp(std::lgamma(hi + 1.0) - std::lgamma(lo - j + 1.0) - std::lgamma(d + j + 1.0));
    const double c = (j % 2 ? -1.0 : 1.0) * binom * std::pow(y, j) / std::exp(std::lgamma(j + 1.0));
    poly[d + 2 * j] = lead * c;
  }
  return poly;
}

namespace {

using Poly = std::vector<std::complex<double>>;

Poly multiply(const Poly& a, const Poly& b) {
  Poly out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

Poly reflected(Poly p) {
  for (std::size_t j = 1; j < p.size(); j += 2) p[j] = -p[j];
  return p;
}

// int_0^{2pi} cos^a sin^b dphi for even a, b.
double angular_integral(int a, int b) {
  return 2.0 * std::exp(std::lgamma(0.5 * (a + 1)) + std::lgamma(0.5 * (b + 1)) -
                        std::lgamma(0.5 * (a + b) + 1.0));
}

}  // namespace

// ------------------------------------------------------------------- engine

CoulombEngine::CoulombEngine(const SingleParticleBasis& basis, const MaterialParams& material,
                             const CoulombOptions& options)
    : basis_(&basis), form_factor_(basis.well_width(), options.form_factor_nodes) {
  material.validate();
  require(std::abs(basis.electron_subband.width - basis.hole_subband.width) < 1e-12,
          ErrorKind::Consistency, "electron and hole subbands must share the well width");
  prefactor_ = constants::coulomb / material.dielectric_constant;

  int max_shell = 0;
  for (const auto& s : basis.electrons) max_shell = std::max(max_shell, s.shell());
  for (const auto& s : basis.holes) max_shell = std::max(max_shell, s.shell());
  max_power_ = 4 * max_shell;

  const double le = basis.electrons.front().oscillator_length;
  const double lh = basis.holes.front().oscillator_length;

  auto build = [&](int nodes) {
    std::array<RadialTable, 3> out;
    const std::array<std::pair<double, double>, 3> lengths{{{le, le}, {lh, lh}, {le, lh}}};
    for (int k = 0; k < 3; ++k) {
      const double s = 0.25 * (lengths[k].first * lengths[k].first +
                               lengths[k].second * lengths[k].second);
      const auto rule = quadrature::mapped_half_line(nodes, 1.0 / std::sqrt(s));
      std::vector<double> ff(rule.size(), 0.0);
      for (std::size_t i = 0; i < rule.size(); ++i) {
        if (std::exp(-s * rule.nodes[i] * rule.nodes[i]) > 0.0) ff[i] = form_factor_(rule.nodes[i]);
      }
      out[k] = make_table(lengths[k].first, lengths[k].second, rule, ff);
    }
    return out;
  };

  auto tables = build(options.radial_nodes);
  if (options.self_test) {
    const auto refined = build(2 * options.radial_nodes);
    for (int k = 0; k < 3; ++k) {
      for (int p = 0; p <= max_power_; p += 2) {
        const double a = tables[k].integrals[p];
        const double b = refined[k].integrals[p];
        if (std::abs(a - b) > options.tolerance * std::abs(b)) {
          char msg[200];
          std::snprintf(msg, sizeof msg,
                        "radial integral q^%d not converged: %.12g vs %.12g with doubled nodes",
                        p, a, b);
          fail(ErrorKind::OracleUnconverged, msg);
        }
      }
    }
  }
  ee_ = std::move(tables[0]);
  hh_ = std::move(tables[1]);
  eh_ = std::move(tables[2]);
}

CoulombEngine::RadialTable CoulombEngine::make_table(double l1, double l2,
                                                     const quadrature::Rule& rule,
                                                     const std::vector<double>& ff) const {
  RadialTable table;
  table.s = 0.25 * (l1 * l1 + l2 * l2);
  const std::size_t n = rule.size();
  std::vector<double> g(n), qpow(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = rule.weights[i] * std::exp(-table.s * rule.nodes[i] * rule.nodes[i]) * ff[i];
    if (!std::isfinite(g[i])) g[i] = 0.0;
  }
  table.integrals.assign(max_power_ + 1, 0.0);
  for (int p = 0; p <= max_power_; ++p) {
    table.integrals[p] = kernels::dot(g, qpow);
    for (std::size_t i = 0; i < n; ++i) {
      qpow[i] = g[i] != 0.0 ? qpow[i] * rule.nodes[i] : 0.0;
    }
  }
  return table;
}

const CoulombEngine::RadialTable& CoulombEngine::table(CoulombKind kind) const {
  switch (kind) {
    case CoulombKind::ee: return ee_;
    case CoulombKind::hh: return hh_;
    case CoulombKind::eh: return eh_;
  }
  return eh_;
}

double CoulombEngine::radial_integral(CoulombKind kind, int power) const {
  require(power >= 0 && power <= max_power_, ErrorKind::Domain, "radial power out of range");
  return table(kind).integrals[power];
}

double CoulombEngine::element(CoulombKind kind, int mu, int nu, int mubar, int nubar) const {
  const auto [first, second] = species_of(kind);
  const auto& set1 = basis_->states(first);
  const auto& set2 = basis_->states(second);
  require(mu >= 0 && mubar >= 0 && mu < int(set1.size()) && mubar < int(set1.size()) &&
              nu >= 0 && nubar >= 0 && nu < int(set2.size()) && nubar < int(set2.size()),
          ErrorKind::Domain, "Coulomb index out of range for the basis");
  const auto& a = set1[mu];
  const auto& abar = set1[mubar];
  const auto& b = set2[nu];
  const auto& bbar = set2[nubar];
  if ((a.n_x + abar.n_x + b.n_x + bbar.n_x) % 2 || (a.n_y + abar.n_y + b.n_y + bbar.n_y) % 2) {
    return 0.0;  // reflection parity
  }
  const double l1 = a.oscillator_length;
  const double l2 = b.oscillator_length;
  // rho_{mu mubar}(q) rho_{nu nubar}(-q), split into x and y polynomials.
  const Poly px = multiply(transition_density_poly(a.n_x, abar.n_x, l1),
                           reflected(transition_density_poly(b.n_x, bbar.n_x, l2)));
  const Poly py = multiply(transition_density_poly(a.n_y, abar.n_y, l1),
                           reflected(transition_density_poly(b.n_y, bbar.n_y, l2)));
  const auto& radial = table(kind).integrals;
  std::complex<double> sum = 0.0;
  for (std::size_t i = 0; i < px.size(); i += 2) {
    for (std::size_t j = 0; j < py.size(); j += 2) {
      sum += px[i] * py[j] * angular_integral(int(i), int(j)) * radial[i + j];
    }
  }
  return prefactor_ * sum.real() / (2.0 * constants::pi);
}

double coulomb_element(CoulombKind kind, int mu, int nu, int mubar, int nubar,
                       const SingleParticleBasis& basis, const MaterialParams& material,
                       const CoulombOptions& options) {
  return CoulombEngine(basis, material, options).element(kind, mu, nu, mubar, nubar);
}

// ------------------------------------------------------------------- orbits

OrbitMap symmetry_orbits(CoulombKind kind, int n_first, int n_second) {
  require(n_first >= 1 && n_second >= 1, ErrorKind::Domain, "empty orbit space");
  const bool same = kind != CoulombKind::eh;
  require(!same || n_first == n_second, ErrorKind::Domain,
          "same-species tensors need equal index ranges");
  OrbitMap map;
  map.n_first = n_first;
  map.n_second = n_second;
  map.orbit_of.assign(static_cast<std::size_t>(n_first) * n_second * n_first * n_second, -1);

  auto canonical = [&](int mu, int nu, int mubar, int nubar) {
    std::array<int, 2> p1{std::min(mu, mubar), std::max(mu, mubar)};
    std::array<int, 2> p2{std::min(nu, nubar), std::max(nu, nubar)};
    if (same && p2 < p1) std::swap(p1, p2);
    return std::array<int, 4>{p1[0], p2[0], p1[1], p2[1]};
  };

  // Representatives in lexicographic order of the canonical tuple.
  for (int mu = 0; mu < n_first; ++mu)
    for (int nu = 0; nu < n_second; ++nu)
      for (int mubar = 0; mubar < n_first; ++mubar)
        for (int nubar = 0; nubar < n_second; ++nubar) {
          const auto rep = canonical(mu, nu, mubar, nubar);
          if (rep == std::array<int, 4>{mu, nu, mubar, nubar}) {
            map.orbit_of[map.flat(mu, nu, mubar, nubar)] =
                static_cast<std::int32_t>(map.representatives.size());
            map.representatives.push_back(rep);
          }
        }
  for (int mu = 0; mu < n_first; ++mu)
    for (int nu = 0; nu < n_second; ++nu)
      for (int mubar = 0; mubar < n_first; ++mubar)
        for (int nubar = 0; nubar < n_second; ++nubar) {
          const auto r = canonical(mu, nu, mubar, nubar);
          map.orbit_of[map.flat(mu, nu, mubar, nubar)] = map.orbit_of[map.flat(r[0], r[1], r[2], r[3])];
        }
  return map;
}

// ------------------------------------------------------------------- tensor

namespace {
std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}
}  // namespace

std::uint64_t basis_hash(const SingleParticleBasis& basis, const MaterialParams& material,
                         const CoulombOptions& options) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "|eps%a|me%a|mh%a|rn%d|ff%d|v1", material.dielectric_constant,
                material.electron_mass, material.hole_mass, options.radial_nodes,
                options.form_factor_nodes);
  return fnv1a(basis.fingerprint() + buf);
}

std::uint64_t basis_id_of(const SingleParticleBasis& basis) { return fnv1a(basis.fingerprint()); }

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

CoulombTensor zero_tensor(CoulombKind kind, const SingleParticleBasis& basis, std::uint64_t hash) {
  const auto [first, second] = species_of(kind);
  CoulombTensor t;
  t.kind = kind;
  t.basis_hash = hash;
  t.basis_id = basis_id_of(basis);
  t.orbits = symmetry_orbits(kind, int(basis.states(first).size()),
                             int(basis.states(second).size()));
  t.values.assign(t.orbits.representatives.size(), 0.0);
  return t;
}

CoulombTensor build_coulomb_tensor(CoulombKind kind, const SingleParticleBasis& basis,
                                   const MaterialParams& material, const CoulombOptions& options,
                                   const std::optional<std::filesystem::path>& cache_dir,
                                   TensorBuildLog* log) {
  const std::uint64_t hash = basis_hash(basis, material, options);
  CoulombTensor tensor = zero_tensor(kind, basis, hash);
  std::filesystem::path path;
  if (cache_dir) {
    path = cache_file(*cache_dir, kind, hash);
    std::string reason;
    if (auto cached = read_tensor_cache(path, kind, hash, tensor.n_first(), tensor.n_second(),
                                        &reason)) {
      if (log) log->cache_hit = true;
      cached->basis_id = tensor.basis_id;
      return std::move(*cached);
    }
    if (log && std::filesystem::exists(path)) {
      log->warnings.push_back("coulomb cache " + path.string() + " rejected (" + reason +
                              "); recomputing");
    }
  }
  const CoulombEngine engine(basis, material, options);
  for (std::size_t k = 0; k < tensor.values.size(); ++k) {
    const auto& r = tensor.orbits.representatives[k];
    tensor.values[k] = engine.element(kind, r[0], r[1], r[2], r[3]);
  }
  if (cache_dir) {
    std::filesystem::create_directories(*cache_dir);
    write_tensor_cache(tensor, path);
  }
  return tensor;
}

}  // namespace qdgate
