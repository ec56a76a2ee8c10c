#include "system.hpp"

namespace qdgate::testing {

namespace fs = std::filesystem;

fs::path cache_dir() { return fs::path(QDGATE_TEST_DIR) / "cache"; }

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::path(QDGATE_TEST_DIR) / "scratch" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

SolvedSystem solve_in_memory(const RunConfig& c) {
  SolvedSystem sys;
  sys.basis = build_sp_basis(c.material, c.geometry, c.electron_states, c.hole_states);
  auto tensor = [&](CoulombKind kind) {
    if (!c.interactions) return zero_tensor(kind, sys.basis, basis_hash(sys.basis, c.material, c.coulomb));
    return build_coulomb_tensor(kind, sys.basis, c.material, c.coulomb, cache_dir());
  };
  sys.ee = tensor(CoulombKind::ee);
  sys.hh = tensor(CoulombKind::hh);
  sys.eh = tensor(CoulombKind::eh);
  sys.spectrum = solve_manybody(sys.basis, sys.ee, sys.hh, sys.eh);
  sys.dipoles = dipole_table(sys.basis, sys.spectrum);
  sys.identification = identify_states(sys.spectrum, sys.basis, sys.dipoles);
  return sys;
}

const TestSystem& default_system() {
  static const TestSystem system = [] {
    RunConfig config = RunConfig::defaults();
    SolvedSystem solved = solve_in_memory(config);
    DriveModel model = DriveModel::from_spectrum(solved.spectrum, solved.dipoles);
    return TestSystem{std::move(config), std::move(solved), std::move(model)};
  }();
  return system;
}

}  // namespace qdgate::testing
