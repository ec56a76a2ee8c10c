#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "qdgate/confinement.hpp"
#include "qdgate/coulomb.hpp"
#include "qdgate/gatesim.hpp"
#include "qdgate/manybody.hpp"
#include "qdgate/optics.hpp"

namespace qdgate {

inline constexpr const char* kRunSchema = "qdgate.run/1";

struct ScenarioConfig {
  enum class Kind { Not, Cnot, Pulses };
  std::string name;
  Kind kind = Kind::Not;
  int qubit = 1;                          // Not
  GateLine line = GateLine::X0MinusDelta; // Cnot
  std::vector<QubitState> inputs{QubitState::q01, QubitState::q00};
  struct PulseSpec {
    GateLine line = GateLine::X0;
    double amplitude = 0.0;    // meV; negative means "calibrated flip"
    double center = 0.0;       // ps
    double tau = 0.5;          // ps
    Envelope envelope = Envelope::Gaussian;
  };
  std::vector<PulseSpec> pulses;  // Pulses
  double duration = 10.0;         // ps simulated for Pulses scenarios
};

struct RunConfig {
  MaterialParams material;
  DotGeometry geometry;
  int electron_states = 10;
  int hole_states = 10;
  CoulombOptions coulomb;
  bool interactions = true;
  SpectrumOptions spectrum;
  TransitionTableOptions table;
  GateOptions gate;
  double sample_step = 0.02;  // ps, trajectory output spacing
  std::vector<ScenarioConfig> scenarios;
  std::vector<double> sweep_tau{0.1, 0.25, 0.5};
  int sweep_qubit = 1;
  double budget_pulse = 0.25;     // ps
  double budget_dephasing = 40.0; // ps
  std::filesystem::path output_dir = "qdgate-out";
  std::filesystem::path cache_dir = "qdgate-cache";
  std::uint64_t seed = 20011;
  int spot_checks = 5;  // Coulomb elements re-evaluated at doubled quadrature

  static RunConfig defaults();
};

/// Strict reader: unknown keys, wrong types and missing schema are config errors.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

/// Everything the later stages need, rebuilt from the solve artifacts.
struct SolvedSystem {
  SingleParticleBasis basis;
  CoulombTensor ee, hh, eh;
  ManyBodySpectrum spectrum;
  DipoleTable dipoles;
  Identification identification;
};

struct StageLog {
  std::vector<std::string> messages;
  int verbosity = 0;
  std::ostream* sink = nullptr;
  void note(const std::string& message);
};

/// Solve stage: basis, tensors (through the cache), many-body spectrum.
/// Writes basis.json, spectrum.json and solve.json into the output directory.
SolvedSystem cmd_solve(const RunConfig& config, StageLog& log);

/// Loads the solve artifacts written for this configuration; an ordering
/// error when they are missing or were produced from a different setup.
SolvedSystem load_solved(const RunConfig& config, StageLog& log);

/// spectrum_{vac,X0,X1,X0+X1}.csv, spectra.json, conditional_table.json, spectra.gp.
void cmd_spectra(const RunConfig& config, StageLog& log);

struct GateRunSummary {
  std::vector<std::string> failed_scenarios;  // commensurability failures
};

/// Runs every configured scenario; gate_<name>.json, trajectory CSVs,
/// populations_<name>.gp and gate_budget.json.
GateRunSummary cmd_gate(const RunConfig& config, StageLog& log);

/// NOT-gate leakage and disturbance table over the configured pulse widths.
void cmd_sweep(const RunConfig& config, StageLog& log);

struct GateBudget {
  double pulse_duration = 0.25;   // ps
  double dephasing_time = 40.0;   // ps
  long long operations = 0;       // sequential pulses per dephasing time
};

GateBudget gate_budget(double pulse_duration, double dephasing_time);
nlohmann::json to_json(const GateBudget& budget);

/// Process exit code for an error raised by one of the commands.
int exit_code_for(const Error& error);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitPhysics = 3;
inline constexpr int kExitCommensurability = 4;
inline constexpr int kExitOrdering = 5;

}  // namespace qdgate
