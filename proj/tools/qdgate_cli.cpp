#include <CLI11.hpp>
#include <iostream>

#include "qdgate/kernels.hpp"
#include "qdgate/pipeline.hpp"

using namespace qdgate;

int main(int argc, char** argv) {
  CLI::App app{"qdgate: exciton qubits and optical conditional gates in a quantum dot"};

  std::string config_path;
  std::string output_dir;
  std::string cache_dir;
  int verbosity = 0;
  bool print_default = false;

  app.add_flag("--print-default-config", print_default, "Print the default configuration and exit");
  app.add_option("-c,--config", config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("-o,--output-dir", output_dir, "Override the output directory");
  app.add_option("--cache-dir", cache_dir, "Override the Coulomb tensor cache directory");
  app.add_flag("-v,--verbose", verbosity, "Progress messages on stderr (repeatable)");
  app.fallthrough();
  auto* solve = app.add_subcommand("solve", "Single-particle basis, Coulomb tensors, many-body spectrum");
  auto* spectra = app.add_subcommand("spectra", "Four absorption spectra and the conditional transition table");
  auto* gate = app.add_subcommand("gate", "Pulse-sequence scenarios, gate reports and trajectories");
  auto* sweep = app.add_subcommand("sweep", "Leakage of the composed NOT versus pulse width");
  auto* config = app.add_subcommand("config", "Print the default configuration");
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }
  if (print_default || config->parsed()) {
    std::cout << to_json(RunConfig::defaults()).dump(2) << '\n';
    return kExitOk;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kExitConfig;
  }

  StageLog log;
  log.verbosity = verbosity;
  log.sink = &std::cerr;
  try {
    RunConfig cfg = config_path.empty() ? RunConfig::defaults() : load_run_config(config_path);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (!cache_dir.empty()) cfg.cache_dir = cache_dir;
    log.note(std::string("kernels: ") + std::string(kernels::to_string(kernels::active_isa())));
    if (solve->parsed()) {
      const auto sys = cmd_solve(cfg, log);
      if (sys.spectrum.qubits)
        std::cout << "delta_meV " << sys.spectrum.delta() << '\n';
    } else if (spectra->parsed()) {
      cmd_spectra(cfg, log);
    } else if (gate->parsed()) {
      const auto summary = cmd_gate(cfg, log);
      for (const auto& name : summary.failed_scenarios)
        std::cerr << "scenario " << name << ": no commensurable readout time\n";
      if (!summary.failed_scenarios.empty()) return kExitCommensurability;
    } else if (sweep->parsed()) {
      cmd_sweep(cfg, log);
    }
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
