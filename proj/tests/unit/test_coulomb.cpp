#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "qdgate/constants.hpp"
#include "qdgate/coulomb.hpp"
#include "system.hpp"

using namespace qdgate;

namespace {

const SingleParticleBasis& default_basis() {
  static const auto basis = build_sp_basis(MaterialParams{}, DotGeometry{}, 10, 10);
  return basis;
}

int find_state(const std::vector<SingleParticleState>& st, int nx, int ny) {
  for (std::size_t i = 0; i < st.size(); ++i)
    if (st[i].n_x == nx && st[i].n_y == ny) return static_cast<int>(i);
  return -1;
}

double chi2(double z, double width) {
  const double s = std::sin(constants::pi * z / width);
  return 2.0 / width * s * s;
}

}  // namespace

TEST_CASE("form factor limits and monotonicity") {
  FormFactor f(5.0);
  CHECK(f(0.0) == doctest::Approx(1.0).epsilon(1e-12));
  double prev = f(0.0);
  for (double q = 0.05; q < 50.0; q *= 1.3) {
    const double v = f(q);
    CHECK(v < prev);
    CHECK(v > 0.0);
    prev = v;
  }
  CHECK(f(1000.0) < 1e-2);
}

TEST_CASE("form factor against two independent quadratures") {
  const double width = 5.0, q = 1.0;
  using boost::math::quadrature::gauss_kronrod;
  auto inner_gk = [&](double z1) {
    auto g = [&](double z2) { return chi2(z2, width) * std::exp(-q * std::abs(z1 - z2)); };
    return gauss_kronrod<double, 31>::integrate(g, 0.0, z1, 15, 1e-13) +
           gauss_kronrod<double, 31>::integrate(g, z1, width, 15, 1e-13);
  };
  const double nested = gauss_kronrod<double, 31>::integrate(
      [&](double z1) { return chi2(z1, width) * inner_gk(z1); }, 0.0, width, 15, 1e-13);

  boost::math::quadrature::tanh_sinh<double> ts;
  auto inner_ts = [&](double z1) {
    auto g = [&](double z2) { return chi2(z2, width) * std::exp(-q * std::abs(z1 - z2)); };
    return ts.integrate(g, 0.0, z1) + ts.integrate(g, z1, width);
  };
  const double double_exp = ts.integrate([&](double z1) { return chi2(z1, width) * inner_ts(z1); },
                                         0.0, width);

  CHECK(nested == doctest::Approx(double_exp).epsilon(1e-10));
  CHECK(form_factor(q, width) == doctest::Approx(nested).epsilon(1e-8));
}

TEST_CASE("strictly 2-D s-s closed form") {
  // (e^2 / eps l) sqrt(pi / 2) from the relative-coordinate Gaussian; the oracle
  // decides it, not the fast path
  const auto& basis = default_basis();
  MaterialParams mat;
  const double l = basis.electrons[0].oscillator_length;
  const double closed = constants::coulomb / (mat.dielectric_constant * l) *
                        std::sqrt(constants::pi / 2.0);
  oracle::BruteForceOptions opt;
  opt.strictly_2d = true;
  const auto bf = oracle::brute_force_element(CoulombKind::ee, 0, 0, 0, 0, basis, mat, opt);
  CHECK(bf.value == doctest::Approx(closed).epsilon(1e-6));
  CHECK(std::abs(bf.value - 0.5 * closed) > 0.4 * closed);

  // fast path with a vanishing well approaches the same value
  DotGeometry thin;
  thin.well_width_z = 1e-3;
  auto thin_basis = build_sp_basis(mat, thin, 1, 1);
  CoulombEngine engine(thin_basis, mat);
  CHECK(engine.element(CoulombKind::ee, 0, 0, 0, 0) == doctest::Approx(closed).epsilon(1e-3));
}

TEST_CASE("fast path agrees with the brute-force integral on seeded tuples") {
  const auto& basis = default_basis();
  MaterialParams mat;
  CoulombEngine engine(basis, mat);
  std::mt19937_64 rng(20011);
  for (auto kind : {CoulombKind::ee, CoulombKind::hh, CoulombKind::eh}) {
    const auto orbits = symmetry_orbits(kind, 10, 10);
    std::uniform_int_distribution<std::size_t> pick(0, orbits.representatives.size() - 1);
    int checked = 0;
    while (checked < 5) {
      const auto t = orbits.representatives[pick(rng)];
      const double fast = engine.element(kind, t[0], t[1], t[2], t[3]);
      if (std::abs(fast) < 1e-6) continue;  // symmetry zeros are covered below
      const auto bf = oracle::brute_force_element(kind, t[0], t[1], t[2], t[3], basis, mat);
      INFO(to_string(kind), " ", t[0], t[1], t[2], t[3]);
      CHECK(fast == doctest::Approx(bf.value).epsilon(1e-3));
      ++checked;
    }
  }
}

TEST_CASE("brute-force oracle symmetry and dielectric scaling") {
  const auto& basis = default_basis();
  MaterialParams mat;
  const int s = find_state(basis.electrons, 0, 0), px = find_state(basis.electrons, 1, 0);
  const int hs = find_state(basis.holes, 0, 0), hpx = find_state(basis.holes, 1, 0);
  const auto a = oracle::brute_force_element(CoulombKind::eh, s, hs, px, hpx, basis, mat);
  const auto b = oracle::brute_force_element(CoulombKind::eh, px, hpx, s, hs, basis, mat);
  CHECK(std::abs(a.value - b.value) <= a.error + b.error + 1e-9);
  MaterialParams twice = mat;
  twice.dielectric_constant *= 2.0;
  const auto c = oracle::brute_force_element(CoulombKind::eh, s, hs, px, hpx, basis, twice);
  CHECK(c.value == doctest::Approx(0.5 * a.value).epsilon(1e-12));
}

TEST_CASE("parity zeros") {
  const auto& basis = default_basis();
  CoulombEngine engine(basis, MaterialParams{});
  const int s = find_state(basis.electrons, 0, 0), px = find_state(basis.electrons, 1, 0);
  const int hs = find_state(basis.holes, 0, 0), hpx = find_state(basis.holes, 1, 0);
  const double ref = engine.element(CoulombKind::ee, s, s, s, s);
  CHECK(std::abs(engine.element(CoulombKind::ee, s, s, s, px)) < 1e-12 * ref);
  CHECK(std::abs(engine.element(CoulombKind::eh, s, hs, s, hpx)) < 1e-12 * ref);
  CHECK(std::abs(engine.element(CoulombKind::hh, hs, hs, hpx, hs)) < 1e-12 * ref);
}

TEST_CASE("element symmetries hold for directly evaluated elements") {
  const auto& basis = default_basis();
  CoulombEngine engine(basis, MaterialParams{});
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> idx(0, 9);
  for (int k = 0; k < 40; ++k) {
    const int a = idx(rng), b = idx(rng), c = idx(rng), d = idx(rng);
    for (auto kind : {CoulombKind::ee, CoulombKind::hh, CoulombKind::eh}) {
      const double v = engine.element(kind, a, b, c, d);
      CHECK(engine.element(kind, c, d, a, b) == doctest::Approx(v).epsilon(1e-10).scale(1.0));
      CHECK(engine.element(kind, c, b, a, d) == doctest::Approx(v).epsilon(1e-10).scale(1.0));
      if (kind != CoulombKind::eh)
        CHECK(engine.element(kind, b, a, d, c) == doctest::Approx(v).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("full tensors: positive direct terms and dominant s-s attraction") {
  const auto& sys = testing::default_system().solved;
  for (const auto* t : {&sys.ee, &sys.hh, &sys.eh})
    for (int m = 0; m < t->n_first(); ++m)
      for (int n = 0; n < t->n_second(); ++n) CHECK((*t)(m, n, m, n) > 0.0);

  const auto& eh = sys.eh;
  const double ss = eh(0, 0, 0, 0);
  double other = 0.0;
  for (std::size_t o = 0; o < eh.values.size(); ++o) {
    const auto& r = eh.orbits.representatives[o];
    if (r == std::array<int, 4>{0, 0, 0, 0}) continue;
    other = std::max(other, std::abs(eh.values[o]));
  }
  CHECK(ss > other);
}

TEST_CASE("elements scale as 1 / eps_r") {
  const auto& basis = default_basis();
  MaterialParams a, b;
  b.dielectric_constant = 2.0 * a.dielectric_constant;
  CoulombEngine ea(basis, a), eb(basis, b);
  for (auto kind : {CoulombKind::ee, CoulombKind::hh, CoulombKind::eh})
    CHECK(eb.element(kind, 1, 2, 1, 2) == doctest::Approx(0.5 * ea.element(kind, 1, 2, 1, 2)).epsilon(1e-14));
}

TEST_CASE("symmetry orbits for three states") {
  CHECK(oracle::count_orbits(true, 3, 3) == 21);
  CHECK(oracle::count_orbits(false, 3, 3) == 36);
  CHECK(symmetry_orbits(CoulombKind::ee, 3, 3).representatives.size() == 21);
  CHECK(symmetry_orbits(CoulombKind::hh, 3, 3).representatives.size() == 21);
  CHECK(symmetry_orbits(CoulombKind::eh, 3, 3).representatives.size() == 36);
  CHECK(21 < 81);
  CHECK(symmetry_orbits(CoulombKind::eh, 4, 3).representatives.size() ==
        static_cast<std::size_t>(oracle::count_orbits(false, 4, 3)));

  // every tuple maps to the orbit of its canonical representative
  const auto map = symmetry_orbits(CoulombKind::ee, 3, 3);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d)
          CHECK(map.orbit_of[map.flat(a, b, c, d)] == map.orbit_of[map.flat(b, a, d, c)]);
}

TEST_CASE("tensor cache round trip and corruption") {
  const auto dir = testing::scratch_dir("coulomb_cache");
  auto basis = build_sp_basis(MaterialParams{}, DotGeometry{}, 6, 6);
  MaterialParams mat;
  TensorBuildLog first, second, third;
  const auto a = build_coulomb_tensor(CoulombKind::eh, basis, mat, {}, dir, &first);
  CHECK_FALSE(first.cache_hit);
  const auto b = build_coulomb_tensor(CoulombKind::eh, basis, mat, {}, dir, &second);
  CHECK(second.cache_hit);
  CHECK(a.values == b.values);
  CHECK(a.basis_hash == b.basis_hash);

  const auto path = cache_file(dir, CoulombKind::eh, a.basis_hash);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "not a tensor";
  }
  const auto c = build_coulomb_tensor(CoulombKind::eh, basis, mat, {}, dir, &third);
  CHECK_FALSE(third.cache_hit);
  CHECK_FALSE(third.warnings.empty());
  CHECK(c.values == a.values);
}

TEST_CASE("cache key changes with the material") {
  auto basis = build_sp_basis(MaterialParams{}, DotGeometry{}, 3, 3);
  MaterialParams a, b;
  b.dielectric_constant = 13.0;
  CHECK(basis_hash(basis, a) != basis_hash(basis, b));
}
