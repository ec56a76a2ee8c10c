#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qdgate/constants.hpp"
#include "qdgate/gatesim.hpp"
#include "qdgate/optics.hpp"
#include "system.hpp"

using namespace qdgate;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Io;
}

const SolvedSystem& sys() { return testing::default_system().solved; }

double signal_at(const Spectrum& s, double e) {
  const auto it = std::lower_bound(s.energy.begin(), s.energy.end(), e - 1e-9);
  return s.signal[static_cast<std::size_t>(it - s.energy.begin())];
}

int find_state(const std::vector<SingleParticleState>& st, int nx, int ny) {
  for (std::size_t i = 0; i < st.size(); ++i)
    if (st[i].n_x == nx && st[i].n_y == ny) return static_cast<int>(i);
  return -1;
}

}  // namespace

TEST_CASE("single-particle dipoles are envelope overlaps") {
  const auto& s = sys();
  const auto& m = s.dipoles.single_particle;
  for (std::size_t e = 0; e < s.basis.electrons.size(); ++e)
    for (std::size_t h = 0; h < s.basis.holes.size(); ++h)
      CHECK(m(e, h) == doctest::Approx(inplane_overlap(s.basis.electrons[e], s.basis.holes[h])).epsilon(1e-14).scale(1.0));
  const int se = find_state(s.basis.electrons, 0, 0), ph = find_state(s.basis.holes, 1, 0);
  CHECK(m(se, ph) == 0.0);
  CHECK(std::abs(m(0, 0)) > 0.5);
}

TEST_CASE("oscillator-strength sum rule") {
  const auto& d = sys().dipoles;
  const double total = d.exciton.squaredNorm();
  CHECK(std::abs(total - d.total_strength()) <= 1e-10 * d.total_strength());
}

TEST_CASE("non-interacting bright exciton carries the bare dipole") {
  RunConfig c = RunConfig::defaults();
  c.interactions = false;
  auto free = testing::solve_in_memory(c);
  const auto& q = *free.spectrum.qubits;
  CHECK(std::abs(free.dipoles.exciton(q.x0)) ==
        doctest::Approx(std::abs(free.dipoles.single_particle(0, 0))).epsilon(1e-12));
}

TEST_CASE("spectrum integral equals the net line weight at two widths") {
  const auto& s = sys();
  for (auto init : {InitialState::Vac, InitialState::X0, InitialState::XX}) {
    double previous = 0.0;
    for (double hwhm : {0.5, 0.25}) {
      SpectrumOptions opt;
      opt.hwhm = hwhm;
      opt.window_min = -4000.0;
      opt.window_max = 4000.0;
      opt.step = 0.02;
      auto sp = absorption_spectrum(init, s.spectrum, s.dipoles, opt);
      const double net = sp.net_line_weight();
      // Lorentzian tails beyond the window hold ~ (2/pi) hwhm / 4000 of each line
      const double gross = [&] {
        double g = 0.0;
        for (const auto& l : sp.lines) g += std::abs(l.weight);
        return g;
      }();
      CHECK(std::abs(sp.integral() - net) <= 2e-4 * gross);
      if (hwhm == 0.25) CHECK(std::abs(sp.integral() - previous) <= 2e-4 * gross);
      previous = sp.integral();
    }
  }
}

TEST_CASE("panel signs and peak positions") {
  const auto& s = sys();
  const auto& q = *s.spectrum.qubits;
  const SpectrumOptions opt;
  const auto vac = absorption_spectrum(InitialState::Vac, s.spectrum, s.dipoles, opt);
  const auto x0 = absorption_spectrum(InitialState::X0, s.spectrum, s.dipoles, opt);
  const auto xx = absorption_spectrum(InitialState::XX, s.spectrum, s.dipoles, opt);
  CHECK(*std::min_element(vac.signal.begin(), vac.signal.end()) >= 0.0);
  CHECK(*std::max_element(xx.signal.begin(), xx.signal.end()) <= 0.0);
  for (const auto& l : vac.lines) CHECK(l.weight > 0.0);
  for (const auto& l : xx.lines) CHECK(l.weight < 0.0);

  // two dominant absorption peaks in the vacuum panel: X0 at zero and X1
  std::vector<SpectralLine> sorted = vac.lines;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.weight > b.weight; });
  REQUIRE(sorted.size() >= 2);
  const double p0 = std::min(sorted[0].position, sorted[1].position);
  const double p1 = std::max(sorted[0].position, sorted[1].position);
  CHECK(p0 == doctest::Approx(0.0).scale(1.0));
  CHECK(p1 == doctest::Approx(q.e_x1 - q.e_x0).epsilon(1e-12));

  const double delta = q.delta();
  CHECK(signal_at(x0, 0.0) < 0.0);
  CHECK(signal_at(x0, q.e_x1 - delta - q.e_x0) > 0.0);
  CHECK(signal_at(xx, -delta) < 0.0);
  CHECK(signal_at(xx, q.e_x1 - delta - q.e_x0) < 0.0);
  bool has_xx_x0_line = false, has_xx_x1_line = false;
  for (const auto& l : xx.lines) {
    if (std::abs(l.position - (q.e_xx - q.e_x1 - q.e_x0)) < 1e-9) has_xx_x0_line = true;
    if (std::abs(l.position - (q.e_xx - q.e_x0 - q.e_x0)) < 1e-9) has_xx_x1_line = true;
  }
  CHECK(has_xx_x0_line);
  CHECK(has_xx_x1_line);
}

TEST_CASE("conditional transition table") {
  const auto& s = sys();
  const auto table = conditional_transition_table(s.spectrum, s.dipoles);
  REQUIRE(table.size() == 4);
  using Q = QubitState;
  const std::pair<const char*, std::vector<Q>> expected[] = {
      {"q2=0", {Q::q00, Q::q10}}, {"q2=1", {Q::q01, Q::q11}},
      {"q1=0", {Q::q00, Q::q01}}, {"q1=1", {Q::q10, Q::q11}}};
  const char* names[] = {"X0", "X0-Delta", "X1", "X1-Delta"};
  for (int i = 0; i < 4; ++i) {
    CHECK(table[i].name == names[i]);
    CHECK(table[i].condition == expected[i].first);
    CHECK(table[i].active == expected[i].second);
    CHECK(table[i].contrast >= 1e3);
    CHECK(table[i].meets_contrast);
    CHECK(table[i].active_strength > 0.0);
  }
  const auto& q = *s.spectrum.qubits;
  CHECK(table[1].frequency == doctest::Approx(q.e_xx - q.e_x1).epsilon(1e-13));
  CHECK(table[3].frequency == doctest::Approx(q.e_xx - q.e_x0).epsilon(1e-13));
}

TEST_CASE("vanishing shift makes the table ambiguous") {
  RunConfig c = RunConfig::defaults();
  c.interactions = false;
  auto free = testing::solve_in_memory(c);
  CHECK(kind_of([&] { conditional_transition_table(free.spectrum, free.dipoles); }) ==
        ErrorKind::Resolution);
}

TEST_CASE("the |01> - |11> coupling equals the drive-induced Rabi rotation") {
  const auto& t = testing::default_system();
  const auto& q = *t.solved.spectrum.qubits;
  const double m = t.solved.dipoles.biexciton(q.xx, q.x1);
  const auto& model = t.model;
  CHECK(model.polarization(model.qubit_index(QubitState::q01), model.qubit_index(QubitState::q11)) == m);
  CHECK(m != 0.0);

  // weak rectangular resonant pulse; expected |c11|^2 = sin^2(field M T / 2 hbar)
  const double duration = 20.0, angle = constants::pi / 4.0;
  Pulse p;
  p.envelope = Envelope::Rectangular;
  p.duration = duration;
  p.center_time = 0.5 * duration;
  p.frequency = q.e_xx - q.e_x1;
  p.reference_dipole = std::abs(m);
  p.amplitude = 2.0 * constants::hbar * angle / duration;  // field * |M|
  auto traj = propagate(model, {StateVector::basis(model, QubitState::q01)}, {p}, 0.0, duration);
  const double transferred = traj.final_state[0].population(model, QubitState::q11);
  CHECK(transferred == doctest::Approx(0.5).epsilon(2e-3));

  // a wrong element (the X0 -> X0+X1 one) would rotate by a clearly different angle
  const double other = t.solved.dipoles.biexciton(q.xx, q.x0);
  const double wrong = std::pow(std::sin(angle * std::abs(other / m)), 2);
  CHECK(std::abs(wrong - 0.5) > 0.05);
}

TEST_CASE("spectrum files and script") {
  const auto& s = sys();
  const auto dir = testing::scratch_dir("optics");
  const auto vac = absorption_spectrum(InitialState::Vac, s.spectrum, s.dipoles);
  write_spectrum_csv(vac, (dir / "vac.csv").string());
  CHECK(std::filesystem::file_size(dir / "vac.csv") > 100);
  const auto table = conditional_transition_table(s.spectrum, s.dipoles);
  const auto script = four_panel_script(table, SpectrumOptions{});
  CHECK(script.find("spectrum_vac.csv") != std::string::npos);
  CHECK(kind_of([] { parse_initial_state("bogus"); }) == ErrorKind::Domain);
}
