#include "qdgate/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace qdgate {

using nlohmann::json;
namespace fs = std::filesystem;

// ------------------------------------------------------------------ config

namespace {

// Reads one JSON object, remembering which keys were consumed so unknown
// ones can be rejected.
class Section {
 public:
  Section(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    require(doc_.is_object(), ErrorKind::Config, path_ + " must be an object");
  }

  bool has(const std::string& key) const { return doc_.contains(key); }

  const json* raw(const std::string& key) {
    used_.insert(key);
    auto it = doc_.find(key);
    return it == doc_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback) {
    const json* v = raw(key);
    if (!v) return fallback;
    require(v->is_number(), ErrorKind::Config, where(key) + " must be a number");
    const double x = v->get<double>();
    require(std::isfinite(x), ErrorKind::Config, where(key) + " must be finite");
    return x;
  }

  int integer(const std::string& key, int fallback) {
    const json* v = raw(key);
    if (!v) return fallback;
    require(v->is_number_integer(), ErrorKind::Config, where(key) + " must be an integer");
    return v->get<int>();
  }

  bool flag(const std::string& key, bool fallback) {
    const json* v = raw(key);
    if (!v) return fallback;
    require(v->is_boolean(), ErrorKind::Config, where(key) + " must be true or false");
    return v->get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const json* v = raw(key);
    if (!v) return fallback;
    require(v->is_string(), ErrorKind::Config, where(key) + " must be a string");
    return v->get<std::string>();
  }

  std::string where(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = doc_.begin(); it != doc_.end(); ++it)
      if (!used_.count(it.key()))
        fail(ErrorKind::Config, "unknown key " + where(it.key()));
  }

 private:
  const json& doc_;
  std::string path_;
  std::set<std::string> used_;
};

template <class F>
auto as_config_error(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    throw Error(ErrorKind::Config, where + ": " + e.detail());
  }
}

QubitState parse_qubit(const std::string& s) {
  if (s == "00") return QubitState::q00;
  if (s == "10") return QubitState::q10;
  if (s == "01") return QubitState::q01;
  if (s == "11") return QubitState::q11;
  fail(ErrorKind::Config, "qubit state must be one of 00, 10, 01, 11 (got '" + s + "')");
}

std::string qubit_name(QubitState q) {
  static const char* names[] = {"00", "10", "01", "11"};
  return names[static_cast<int>(q)];
}

std::vector<QubitState> parse_inputs(Section& s, const std::vector<QubitState>& fallback) {
  const json* v = s.raw("inputs");
  if (!v) return fallback;
  require(v->is_array() && !v->empty(), ErrorKind::Config,
          s.where("inputs") + " must be a non-empty array");
  std::vector<QubitState> out;
  for (const auto& e : *v) {
    require(e.is_string(), ErrorKind::Config, s.where("inputs") + " entries must be strings");
    out.push_back(parse_qubit(e.get<std::string>()));
  }
  return out;
}

ScenarioConfig parse_scenario(const json& doc, const std::string& path) {
  Section s(doc, path);
  ScenarioConfig sc;
  sc.name = s.text("name", "");
  require(!sc.name.empty(), ErrorKind::Config, s.where("name") + " is required");
  require(sc.name.find_first_of("/\\ ") == std::string::npos, ErrorKind::Config,
          s.where("name") + " may not contain spaces or path separators");
  const std::string kind = s.text("kind", "not");
  if (kind == "not") {
    sc.kind = ScenarioConfig::Kind::Not;
    sc.qubit = s.integer("qubit", 1);
    require(sc.qubit == 1 || sc.qubit == 2, ErrorKind::Config, s.where("qubit") + " must be 1 or 2");
  } else if (kind == "cnot") {
    sc.kind = ScenarioConfig::Kind::Cnot;
    sc.line = as_config_error(s.where("line"), [&] { return parse_gate_line(s.text("line", "X0-Delta")); });
  } else if (kind == "pulses") {
    sc.kind = ScenarioConfig::Kind::Pulses;
    sc.duration = s.number("duration_ps", sc.duration);
    require(sc.duration > 0.0, ErrorKind::Config, s.where("duration_ps") + " must be positive");
    const json* list = s.raw("pulses");
    require(list && list->is_array() && !list->empty(), ErrorKind::Config,
            s.where("pulses") + " must be a non-empty array");
    for (std::size_t i = 0; i < list->size(); ++i) {
      Section p((*list)[i], s.where("pulses") + "[" + std::to_string(i) + "]");
      ScenarioConfig::PulseSpec spec;
      spec.line = as_config_error(p.where("line"), [&] { return parse_gate_line(p.text("line", "X0")); });
      const json* amp = p.raw("amplitude_meV");
      require(amp != nullptr, ErrorKind::Config, p.where("amplitude_meV") + " is required");
      if (amp->is_string()) {
        require(amp->get<std::string>() == "flip", ErrorKind::Config,
                p.where("amplitude_meV") + " must be a number or \"flip\"");
        spec.amplitude = -1.0;
      } else {
        require(amp->is_number() && amp->get<double>() >= 0.0, ErrorKind::Config,
                p.where("amplitude_meV") + " must be a non-negative number or \"flip\"");
        spec.amplitude = amp->get<double>();
      }
      spec.center = p.number("center_ps", 0.0);
      spec.tau = p.number("tau_ps", spec.tau);
      require(spec.tau > 0.0, ErrorKind::Config, p.where("tau_ps") + " must be positive");
      spec.envelope = as_config_error(p.where("envelope"),
                                      [&] { return parse_envelope(p.text("envelope", "gaussian")); });
      p.finish();
      sc.pulses.push_back(spec);
    }
  } else {
    fail(ErrorKind::Config, s.where("kind") + " must be not, cnot or pulses");
  }
  sc.inputs = parse_inputs(s, sc.inputs);
  s.finish();
  return sc;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig c;
  ScenarioConfig not_q1;
  not_q1.name = "not_q1";
  not_q1.kind = ScenarioConfig::Kind::Not;
  not_q1.qubit = 1;
  not_q1.inputs = {QubitState::q01, QubitState::q00};
  c.scenarios.push_back(not_q1);
  return c;
}

RunConfig parse_run_config(const json& doc) {
  require(doc.is_object(), ErrorKind::Config, "config must be a JSON object");
  Section root(doc, "config");
  const std::string schema = root.text("schema", "");
  require(schema == kRunSchema, ErrorKind::Config,
          "config.schema must be \"" + std::string(kRunSchema) + "\" (got \"" + schema + "\")");
  RunConfig c = RunConfig::defaults();

  if (const json* v = root.raw("material")) {
    Section s(*v, "material");
    c.material.electron_mass = s.number("electron_mass_m0", c.material.electron_mass);
    c.material.hole_mass = s.number("hole_mass_m0", c.material.hole_mass);
    c.material.dielectric_constant = s.number("dielectric_constant", c.material.dielectric_constant);
    c.material.band_gap_offset = s.number("band_gap_offset_meV", c.material.band_gap_offset);
    s.finish();
  }
  if (const json* v = root.raw("geometry")) {
    Section s(*v, "geometry");
    c.geometry.hbar_omega_e = s.number("hbar_omega_e_meV", c.geometry.hbar_omega_e);
    c.geometry.hbar_omega_h = s.number("hbar_omega_h_meV", c.geometry.hbar_omega_h);
    c.geometry.well_width_z = s.number("well_width_nm", c.geometry.well_width_z);
    s.finish();
  }
  as_config_error("material", [&] { c.material.validate(); return 0; });
  as_config_error("geometry", [&] { c.geometry.validate(); return 0; });
  if (const json* v = root.raw("basis")) {
    Section s(*v, "basis");
    c.electron_states = s.integer("electron_states", c.electron_states);
    c.hole_states = s.integer("hole_states", c.hole_states);
    s.finish();
  }
  require(c.electron_states >= 2 && c.hole_states >= 2, ErrorKind::Config,
          "basis needs at least two states per species");
  if (const json* v = root.raw("coulomb")) {
    Section s(*v, "coulomb");
    c.coulomb.radial_nodes = s.integer("radial_nodes", c.coulomb.radial_nodes);
    c.coulomb.form_factor_nodes = s.integer("form_factor_nodes", c.coulomb.form_factor_nodes);
    c.coulomb.tolerance = s.number("tolerance", c.coulomb.tolerance);
    c.coulomb.self_test = s.flag("self_test", c.coulomb.self_test);
    c.interactions = s.flag("enabled", c.interactions);
    c.spot_checks = s.integer("spot_checks", c.spot_checks);
    s.finish();
  }
  require(c.coulomb.radial_nodes >= 8 && c.coulomb.form_factor_nodes >= 4 &&
              c.coulomb.tolerance > 0.0 && c.spot_checks >= 0,
          ErrorKind::Config, "coulomb quadrature settings out of range");
  if (const json* v = root.raw("optics")) {
    Section s(*v, "optics");
    c.spectrum.hwhm = s.number("hwhm_meV", c.spectrum.hwhm);
    c.spectrum.window_min = s.number("window_min_meV", c.spectrum.window_min);
    c.spectrum.window_max = s.number("window_max_meV", c.spectrum.window_max);
    c.spectrum.step = s.number("step_meV", c.spectrum.step);
    c.table.resolution = s.number("resolution_meV", c.table.resolution);
    c.table.min_contrast = s.number("min_contrast", c.table.min_contrast);
    s.finish();
  }
  require(c.spectrum.hwhm > 0.0 && c.spectrum.step > 0.0 &&
              c.spectrum.window_max > c.spectrum.window_min && c.table.resolution > 0.0,
          ErrorKind::Config, "optics settings out of range");
  if (const json* v = root.raw("gate")) {
    Section s(*v, "gate");
    c.gate.tau = s.number("tau_ps", c.gate.tau);
    c.gate.envelope = as_config_error(s.where("envelope"), [&] {
      return parse_envelope(s.text("envelope", std::string(to_string(c.gate.envelope))));
    });
    c.gate.amplitude_tolerance = s.number("amplitude_tolerance", c.gate.amplitude_tolerance);
    c.gate.calibrate = s.flag("calibrate_amplitude", c.gate.calibrate);
    c.gate.calibrate_frequency = s.flag("calibrate_frequency", c.gate.calibrate_frequency);
    c.gate.phase_tolerance = s.number("phase_tolerance_rad", c.gate.phase_tolerance);
    c.gate.horizon = s.number("horizon_ps", c.gate.horizon);
    c.gate.pulse_gap = s.number("pulse_gap_ps", c.gate.pulse_gap);
    c.gate.propagation.tolerance = s.number("step_tolerance", c.gate.propagation.tolerance);
    c.gate.propagation.min_step = s.number("min_step_ps", c.gate.propagation.min_step);
    c.gate.propagation.max_step = s.number("max_step_ps", c.gate.propagation.max_step);
    c.sample_step = s.number("sample_step_ps", c.sample_step);
    s.finish();
  }
  require(c.gate.tau > 0.0 && c.gate.amplitude_tolerance > 0.0 && c.gate.phase_tolerance > 0.0 &&
              c.gate.horizon >= 0.0 && c.gate.pulse_gap >= 0.0 &&
              c.gate.propagation.tolerance > 0.0 && c.gate.propagation.min_step > 0.0 &&
              c.gate.propagation.max_step >= c.gate.propagation.min_step && c.sample_step > 0.0,
          ErrorKind::Config, "gate settings out of range");
  if (const json* v = root.raw("scenarios")) {
    require(v->is_array(), ErrorKind::Config, "scenarios must be an array");
    c.scenarios.clear();
    std::set<std::string> names;
    for (std::size_t i = 0; i < v->size(); ++i) {
      c.scenarios.push_back(parse_scenario((*v)[i], "scenarios[" + std::to_string(i) + "]"));
      require(names.insert(c.scenarios.back().name).second, ErrorKind::Config,
              "duplicate scenario name '" + c.scenarios.back().name + "'");
    }
  }
  if (const json* v = root.raw("sweep")) {
    Section s(*v, "sweep");
    if (const json* taus = s.raw("tau_ps")) {
      require(taus->is_array() && !taus->empty(), ErrorKind::Config,
              "sweep.tau_ps must be a non-empty array");
      c.sweep_tau.clear();
      for (const auto& t : *taus) {
        require(t.is_number() && t.get<double>() > 0.0, ErrorKind::Config,
                "sweep.tau_ps entries must be positive numbers");
        c.sweep_tau.push_back(t.get<double>());
      }
    }
    c.sweep_qubit = s.integer("qubit", c.sweep_qubit);
    require(c.sweep_qubit == 1 || c.sweep_qubit == 2, ErrorKind::Config, "sweep.qubit must be 1 or 2");
    s.finish();
  }
  if (const json* v = root.raw("budget")) {
    Section s(*v, "budget");
    c.budget_pulse = s.number("pulse_duration_ps", c.budget_pulse);
    c.budget_dephasing = s.number("dephasing_time_ps", c.budget_dephasing);
    s.finish();
  }
  require(c.budget_pulse > 0.0 && c.budget_dephasing > 0.0, ErrorKind::Config,
          "budget times must be positive");
  c.output_dir = root.text("output_dir", c.output_dir.string());
  c.cache_dir = root.text("cache_dir", c.cache_dir.string());
  if (const json* v = root.raw("seed")) {
    require(v->is_number_unsigned(), ErrorKind::Config, "seed must be a non-negative integer");
    c.seed = v->get<std::uint64_t>();
  }
  root.finish();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Config, "cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, path.string() + ": " + e.what());
  }
  return parse_run_config(doc);
}

json to_json(const RunConfig& c) {
  json scenarios = json::array();
  for (const auto& s : c.scenarios) {
    json j{{"name", s.name}};
    std::vector<std::string> inputs;
    for (auto q : s.inputs) inputs.push_back(qubit_name(q));
    switch (s.kind) {
      case ScenarioConfig::Kind::Not: j["kind"] = "not"; j["qubit"] = s.qubit; break;
      case ScenarioConfig::Kind::Cnot: j["kind"] = "cnot"; j["line"] = to_string(s.line); break;
      case ScenarioConfig::Kind::Pulses: {
        j["kind"] = "pulses";
        j["duration_ps"] = s.duration;
        json ps = json::array();
        for (const auto& p : s.pulses) {
          json pj{{"line", to_string(p.line)}, {"center_ps", p.center}, {"tau_ps", p.tau},
                  {"envelope", to_string(p.envelope)}};
          if (p.amplitude < 0.0)
            pj["amplitude_meV"] = "flip";
          else
            pj["amplitude_meV"] = p.amplitude;
          ps.push_back(pj);
        }
        j["pulses"] = ps;
        break;
      }
    }
    j["inputs"] = inputs;
    scenarios.push_back(j);
  }
  return {
      {"schema", kRunSchema},
      {"material",
       {{"electron_mass_m0", c.material.electron_mass},
        {"hole_mass_m0", c.material.hole_mass},
        {"dielectric_constant", c.material.dielectric_constant},
        {"band_gap_offset_meV", c.material.band_gap_offset}}},
      {"geometry",
       {{"hbar_omega_e_meV", c.geometry.hbar_omega_e},
        {"hbar_omega_h_meV", c.geometry.hbar_omega_h},
        {"well_width_nm", c.geometry.well_width_z}}},
      {"basis", {{"electron_states", c.electron_states}, {"hole_states", c.hole_states}}},
      {"coulomb",
       {{"radial_nodes", c.coulomb.radial_nodes},
        {"form_factor_nodes", c.coulomb.form_factor_nodes},
        {"tolerance", c.coulomb.tolerance},
        {"self_test", c.coulomb.self_test},
        {"enabled", c.interactions},
        {"spot_checks", c.spot_checks}}},
      {"optics",
       {{"hwhm_meV", c.spectrum.hwhm},
        {"window_min_meV", c.spectrum.window_min},
        {"window_max_meV", c.spectrum.window_max},
        {"step_meV", c.spectrum.step},
        {"resolution_meV", c.table.resolution},
        {"min_contrast", c.table.min_contrast}}},
      {"gate",
       {{"tau_ps", c.gate.tau},
        {"envelope", to_string(c.gate.envelope)},
        {"amplitude_tolerance", c.gate.amplitude_tolerance},
        {"calibrate_amplitude", c.gate.calibrate},
        {"calibrate_frequency", c.gate.calibrate_frequency},
        {"phase_tolerance_rad", c.gate.phase_tolerance},
        {"horizon_ps", c.gate.horizon},
        {"pulse_gap_ps", c.gate.pulse_gap},
        {"step_tolerance", c.gate.propagation.tolerance},
        {"min_step_ps", c.gate.propagation.min_step},
        {"max_step_ps", c.gate.propagation.max_step},
        {"sample_step_ps", c.sample_step}}},
      {"scenarios", scenarios},
      {"sweep", {{"tau_ps", c.sweep_tau}, {"qubit", c.sweep_qubit}}},
      {"budget",
       {{"pulse_duration_ps", c.budget_pulse}, {"dephasing_time_ps", c.budget_dephasing}}},
      {"output_dir", c.output_dir.string()},
      {"cache_dir", c.cache_dir.string()},
      {"seed", c.seed},
  };
}

// ------------------------------------------------------------------ stages

void StageLog::note(const std::string& message) {
  messages.push_back(message);
  if (sink && verbosity > 0) *sink << message << '\n';
}

namespace {

template <class F>
auto staged(const char* stage, F&& f) {
  try {
    return f();
  } catch (const CommensurabilityFailure&) {
    throw;
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw Error(e.kind(), e.detail(), stage);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
    out << text;
    require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + path.string());
  }
  fs::rename(tmp, path);
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Ordering,
          "missing artifact " + path.string() + "; run 'solve' first");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Ordering, "unreadable artifact " + path.string() + ": " + e.what());
  }
}

// Configuration sections the solve artifacts depend on.
std::string solve_fingerprint(const RunConfig& c) {
  const json full = to_json(c);
  const json part{{"material", full["material"]},
                  {"geometry", full["geometry"]},
                  {"basis", full["basis"]},
                  {"coulomb", full["coulomb"]}};
  return hash_hex(fnv1a(part.dump()));
}

std::array<CoulombTensor, 3> tensors_from_cache(const RunConfig& c,
                                                const SingleParticleBasis& basis) {
  const auto hash = basis_hash(basis, c.material, c.coulomb);
  std::array<CoulombTensor, 3> out;
  const CoulombKind kinds[3] = {CoulombKind::ee, CoulombKind::hh, CoulombKind::eh};
  for (int k = 0; k < 3; ++k) {
    if (!c.interactions) {
      out[k] = zero_tensor(kinds[k], basis, hash);
      continue;
    }
    const auto [a, b] = species_of(kinds[k]);
    const int n1 = static_cast<int>(basis.states(a).size());
    const int n2 = static_cast<int>(basis.states(b).size());
    std::string reason;
    auto t = read_tensor_cache(cache_file(c.cache_dir, kinds[k], hash), kinds[k], hash, n1, n2,
                               &reason);
    require(t.has_value(), ErrorKind::Ordering,
            std::string(to_string(kinds[k])) + " Coulomb tensor not available (" + reason +
                "); run 'solve' first");
    out[k] = std::move(*t);
    out[k].basis_id = basis_id_of(basis);
  }
  return out;
}

SolvedSystem finish_solve(const RunConfig& c, SingleParticleBasis basis,
                          std::array<CoulombTensor, 3> tensors) {
  SolvedSystem sys;
  sys.basis = std::move(basis);
  sys.ee = std::move(tensors[0]);
  sys.hh = std::move(tensors[1]);
  sys.eh = std::move(tensors[2]);
  sys.spectrum = staged("manybody", [&] { return solve_manybody(sys.basis, sys.ee, sys.hh, sys.eh); });
  sys.dipoles = staged("optics", [&] { return dipole_table(sys.basis, sys.spectrum); });
  sys.identification =
      staged("manybody", [&] { return identify_states(sys.spectrum, sys.basis, sys.dipoles); });
  (void)c;
  return sys;
}

json spot_check(const RunConfig& c, const SolvedSystem& sys, StageLog& log) {
  json out = json::array();
  if (!c.interactions || c.spot_checks == 0) return out;
  std::mt19937_64 rng(c.seed);
  CoulombOptions fine = c.coulomb;
  fine.radial_nodes *= 2;
  fine.self_test = false;
  for (const CoulombTensor* t : {&sys.ee, &sys.hh, &sys.eh}) {
    std::vector<std::size_t> nonzero;
    for (std::size_t o = 0; o < t->values.size(); ++o)
      if (t->values[o] != 0.0) nonzero.push_back(o);
    if (nonzero.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, nonzero.size() - 1);
    for (int i = 0; i < c.spot_checks; ++i) {
      const auto r = t->orbits.representatives[nonzero[pick(rng)]];
      const double fast = (*t)(r[0], r[1], r[2], r[3]);
      const double ref = coulomb_element(t->kind, r[0], r[1], r[2], r[3], sys.basis, c.material, fine);
      const double dev = std::abs(fast - ref) / std::max(std::abs(ref), 1e-12);
      const bool exact_zero = fast == 0.0 && ref == 0.0;
      out.push_back({{"kind", to_string(t->kind)},
                     {"indices", r},
                     {"value_meV", fast},
                     {"reference_meV", ref},
                     {"relative_deviation", exact_zero ? 0.0 : dev}});
      if (!exact_zero && std::abs(fast - ref) > 10.0 * c.coulomb.tolerance * std::max(std::abs(ref), 1.0))
        log.note("warning: Coulomb spot check deviates for " + std::string(to_string(t->kind)) +
                 " element; relative deviation " + std::to_string(dev));
    }
  }
  return out;
}

json qubit_summary(const ManyBodySpectrum& s) {
  if (!s.qubits) return nullptr;
  const auto& q = *s.qubits;
  return {{"E_X0_meV", q.e_x0}, {"E_X1_meV", q.e_x1}, {"E_XX_meV", q.e_xx}, {"delta_meV", q.delta()}};
}

}  // namespace

SolvedSystem cmd_solve(const RunConfig& c, StageLog& log) {
  fs::create_directories(c.output_dir);
  auto basis = staged("confinement", [&] {
    return build_sp_basis(c.material, c.geometry, c.electron_states, c.hole_states);
  });
  std::array<CoulombTensor, 3> tensors;
  const CoulombKind kinds[3] = {CoulombKind::ee, CoulombKind::hh, CoulombKind::eh};
  if (c.interactions) fs::create_directories(c.cache_dir);
  for (int k = 0; k < 3; ++k) {
    tensors[k] = staged("coulomb", [&] {
      if (!c.interactions)
        return zero_tensor(kinds[k], basis, basis_hash(basis, c.material, c.coulomb));
      TensorBuildLog tlog;
      auto t = build_coulomb_tensor(kinds[k], basis, c.material, c.coulomb, c.cache_dir, &tlog);
      log.note(std::string(to_string(kinds[k])) + " tensor: " +
               (tlog.cache_hit ? "cache hit" : "computed"));
      for (const auto& w : tlog.warnings) log.note("warning: " + w);
      return t;
    });
  }
  SolvedSystem sys = finish_solve(c, std::move(basis), std::move(tensors));
  const json checks = staged("coulomb", [&] { return spot_check(c, sys, log); });

  write_json(c.output_dir / "basis.json", to_json(sys.basis));
  write_json(c.output_dir / "spectrum.json", to_json(sys.spectrum, sys.basis));
  write_json(c.output_dir / "solve.json",
             {{"schema", "qdgate.solve/1"},
              {"config_fingerprint", solve_fingerprint(c)},
              {"basis_hash", hash_hex(basis_hash(sys.basis, c.material, c.coulomb))},
              {"interactions", c.interactions},
              {"exciton_states", sys.spectrum.excitons.size()},
              {"biexciton_states", sys.spectrum.biexcitons.size()},
              {"qubits", qubit_summary(sys.spectrum)},
              {"product_overlap", sys.identification.product_overlap},
              {"seed", c.seed},
              {"coulomb_spot_checks", checks}});
  if (sys.spectrum.qubits)
    log.note("delta = " + std::to_string(sys.spectrum.delta()) + " meV");
  return sys;
}

SolvedSystem load_solved(const RunConfig& c, StageLog& log) {
  const json solve = read_json(c.output_dir / "solve.json");
  for (const char* name : {"basis.json", "spectrum.json"})
    require(fs::exists(c.output_dir / name), ErrorKind::Ordering,
            "missing artifact " + (c.output_dir / name).string() + "; run 'solve' first");
  require(solve.value("config_fingerprint", std::string()) == solve_fingerprint(c),
          ErrorKind::Ordering,
          "solve artifacts in " + c.output_dir.string() +
              " were produced for a different configuration; run 'solve' again");
  auto basis = staged("confinement", [&] {
    return build_sp_basis(c.material, c.geometry, c.electron_states, c.hole_states);
  });
  auto tensors = tensors_from_cache(c, basis);
  SolvedSystem sys = finish_solve(c, std::move(basis), std::move(tensors));
  if (sys.spectrum.qubits && solve["qubits"].is_object()) {
    const double recorded = solve["qubits"]["delta_meV"].get<double>();
    require(recorded == sys.spectrum.delta(), ErrorKind::Consistency,
            "rebuilt spectrum does not reproduce the recorded biexciton shift");
  }
  log.note("loaded solve artifacts from " + c.output_dir.string());
  return sys;
}

void cmd_spectra(const RunConfig& c, StageLog& log) {
  const SolvedSystem sys = load_solved(c, log);
  json panels = json::object();
  for (auto init : {InitialState::Vac, InitialState::X0, InitialState::X1, InitialState::XX}) {
    const auto s = staged("optics", [&] {
      return absorption_spectrum(init, sys.spectrum, sys.dipoles, c.spectrum);
    });
    const std::string name(to_string(init));
    write_spectrum_csv(s, (c.output_dir / ("spectrum_" + name + ".csv")).string());
    panels[name] = to_json(s);
  }
  write_json(c.output_dir / "spectra.json", {{"schema", "qdgate.spectra/1"}, {"panels", panels}});
  const auto table = staged("optics", [&] {
    return conditional_transition_table(sys.spectrum, sys.dipoles, c.table);
  });
  write_json(c.output_dir / "conditional_table.json", to_json(table));
  write_text(c.output_dir / "spectra.gp", four_panel_script(table, c.spectrum));
  for (const auto& r : table)
    log.note(r.name + " (" + r.condition + "): contrast " + std::to_string(r.contrast));
}

GateBudget gate_budget(double pulse_duration, double dephasing_time) {
  require(pulse_duration > 0.0 && dephasing_time > 0.0, ErrorKind::Domain,
          "budget times must be positive");
  GateBudget b;
  b.pulse_duration = pulse_duration;
  b.dephasing_time = dephasing_time;
  b.operations = static_cast<long long>(std::floor(dephasing_time / pulse_duration + 1e-9));
  return b;
}

json to_json(const GateBudget& b) {
  std::ostringstream statement;
  statement << b.operations << " sequential pulse operations of " << b.pulse_duration
            << " ps fit within one dephasing time of " << b.dephasing_time << " ps";
  return {{"schema", "qdgate.gate-budget/1"},
          {"pulse_duration_ps", b.pulse_duration},
          {"dephasing_time_ps", b.dephasing_time},
          {"operations_per_dephasing_time", b.operations},
          {"statement", statement.str()}};
}

namespace {

json pulses_json(const PulseSequence& pulses) {
  json out = json::array();
  for (const auto& p : pulses) {
    json j{{"envelope", to_string(p.envelope)},
           {"amplitude_meV", p.amplitude},
           {"center_ps", p.center_time},
           {"duration_ps", p.duration},
           {"photon_energy_meV", p.frequency},
           {"reference_dipole", p.reference_dipole}};
    if (p.line) j["line"] = to_string(*p.line);
    out.push_back(j);
  }
  return out;
}

std::vector<double> sample_grid(double t0, double t1, double step) {
  std::vector<double> out;
  const auto n = static_cast<long long>(std::floor((t1 - t0) / step + 1e-9));
  for (long long k = 0; k <= n; ++k) out.push_back(t0 + static_cast<double>(k) * step);
  if (out.back() < t1) out.push_back(t1);
  return out;
}

std::string population_script(const std::string& name, const std::vector<QubitState>& inputs,
                        const PulseSequence& pulses) {
  std::string s = "# Qubit populations during the pulse sequence.\n";
  s += "set terminal pngcairo size 800,500\nset output '" + name + ".png'\n";
  s += "set datafile separator ','\nset xlabel 'time (ps)'\nset ylabel 'population'\n";
  s += "set yrange [-0.05:1.05]\nset key outside right\n";
  char buf[256];
  for (const auto& p : pulses) {
    std::snprintf(buf, sizeof buf,
                  "set arrow from %.4f, graph 0 to %.4f, graph 1 nohead dt 3 lc rgb 'gray'\n",
                  p.center_time, p.center_time);
    s += buf;
    if (p.line) {
      std::snprintf(buf, sizeof buf, "set label '%s' at %.4f, graph 1.03 center\n",
                    std::string(to_string(*p.line)).c_str(), p.center_time);
      s += buf;
    }
  }
  static const char* cols[] = {"|00>", "|10>", "|01>", "|11>"};
  std::string plot = "plot ";
  bool first = true;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string file = "trajectory_" + name + "_" + qubit_name(inputs[i]) + ".csv";
    const char* dash = i == 0 ? "1" : "2";
    for (int q = 0; q < 4; ++q) {
      if (!first) plot += ", \\\n     ";
      first = false;
      std::snprintf(buf, sizeof buf, "'%s' every ::1 using 1:%d with lines dt %s lc %d title '%s from %s'",
                    file.c_str(), q + 2, dash, q + 1, cols[q], qubit_name(inputs[i]).c_str());
      plot += buf;
    }
  }
  return s + plot + "\n";
}

}  // namespace

GateRunSummary cmd_gate(const RunConfig& c, StageLog& log) {
  const SolvedSystem sys = load_solved(c, log);
  const DriveModel model = staged("gatesim", [&] { return DriveModel::from_spectrum(sys.spectrum, sys.dipoles); });
  GateRunSummary summary;
  std::string script;
  for (const auto& sc : c.scenarios) {
    PulseSequence pulses;
    std::optional<GateReport> report;
    bool commensurable = true;
    double t_begin = 0.0, t_final = 0.0;
    try {
      staged("gatesim", [&] {
        switch (sc.kind) {
          case ScenarioConfig::Kind::Not: {
            auto [p, r] = compose_not(sc.qubit, model, c.gate);
            pulses = p;
            report = r;
            break;
          }
          case ScenarioConfig::Kind::Cnot: {
            auto [p, r] = synthesize_cnot(sc.line, model, c.gate);
            pulses = p;
            report = r;
            break;
          }
          case ScenarioConfig::Kind::Pulses: {
            for (const auto& spec : sc.pulses) {
              GateOptions o = c.gate;
              o.tau = spec.tau;
              o.envelope = spec.envelope;
              o.calibrate = spec.amplitude < 0.0 && c.gate.calibrate;
              Pulse p = calibrate_pulse(spec.line, model, o, spec.center);
              if (spec.amplitude >= 0.0) p.amplitude = spec.amplitude;
              pulses.push_back(p);
            }
            break;
          }
        }
        return 0;
      });
    } catch (const CommensurabilityFailure& f) {
      pulses = f.pulses();
      report = f.report();
      commensurable = false;
      summary.failed_scenarios.push_back(sc.name);
      log.note("scenario " + sc.name + ": " + f.what());
    }
    if (report) {
      t_begin = pulses.front().start();
      for (const auto& p : pulses) t_begin = std::min(t_begin, p.start());
      t_final = t_begin + report->readout_time;
    } else {
      t_begin = 0.0;
      t_final = sc.duration;
    }
    PropagationOptions popts = c.gate.propagation;
    popts.output_times = sample_grid(t_begin, t_final, c.sample_step);
    std::vector<StateVector> inputs;
    for (auto q : sc.inputs) inputs.push_back(StateVector::basis(model, q));
    const Trajectory traj = staged("gatesim", [&] {
      return propagate(model, inputs, pulses, t_begin, t_final, popts);
    });
    json per_input = json::object();
    for (std::size_t i = 0; i < sc.inputs.size(); ++i) {
      const std::string qn = qubit_name(sc.inputs[i]);
      std::ostringstream csv;
      write_trajectory_csv(csv, traj, model, i, /*amplitudes=*/true);
      write_text(c.output_dir / ("trajectory_" + sc.name + "_" + qn + ".csv"), csv.str());
      json pops = json::object();
      for (int q = 0; q < 4; ++q)
        pops[qubit_name(static_cast<QubitState>(q))] =
            traj.final_state[i].population(model, static_cast<QubitState>(q));
      per_input[qn] = {{"final_populations", pops},
                       {"max_leakage", traj.max_leakage[i]},
                       {"final_leakage", traj.final_state[i].leakage(model)}};
    }
    json doc{{"schema", "qdgate.gate-run/1"},
             {"scenario", sc.name},
             {"pulses", pulses_json(pulses)},
             {"start_ps", t_begin},
             {"end_ps", t_final},
             {"inputs", per_input},
             {"commensurable", commensurable}};
    if (report) doc["report"] = to_json(*report);
    write_json(c.output_dir / ("gate_" + sc.name + ".json"), doc);
    write_text(c.output_dir / ("populations_" + sc.name + ".gp"), population_script(sc.name, sc.inputs, pulses));
    log.note("scenario " + sc.name + " done");
  }
  write_json(c.output_dir / "gate_budget.json", to_json(gate_budget(c.budget_pulse, c.budget_dephasing)));
  return summary;
}

void cmd_sweep(const RunConfig& c, StageLog& log) {
  const SolvedSystem sys = load_solved(c, log);
  const DriveModel model = staged("gatesim", [&] { return DriveModel::from_spectrum(sys.spectrum, sys.dipoles); });
  std::ostringstream csv;
  csv << "tau_ps,fidelity,transfer_fidelity,min_target_population,max_leakage,max_disturbance,"
         "commensurable,readout_ps\n";
  json rows = json::array();
  for (double tau : c.sweep_tau) {
    GateOptions o = c.gate;
    o.tau = tau;
    GateReport r;
    try {
      r = staged("gatesim", [&] { return compose_not(c.sweep_qubit, model, o).second; });
    } catch (const CommensurabilityFailure& f) {
      r = f.report();
    }
    const double min_pop =
        *std::min_element(r.final_populations_target.begin(), r.final_populations_target.end());
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.6g,%.10e,%.10e,%.10e,%.10e,%.10e,%d,%.6f\n", tau, r.fidelity,
                  r.transfer_fidelity, min_pop, r.max_leakage, r.max_disturbance,
                  r.commensurable ? 1 : 0, r.readout_time);
    csv << buf;
    rows.push_back({{"tau_ps", tau},
                    {"fidelity", r.fidelity},
                    {"transfer_fidelity", r.transfer_fidelity},
                    {"min_target_population", min_pop},
                    {"max_leakage", r.max_leakage},
                    {"max_disturbance", r.max_disturbance},
                    {"commensurable", r.commensurable},
                    {"readout_ps", r.readout_time}});
    log.note("tau = " + std::to_string(tau) + " ps: leakage " + std::to_string(r.max_leakage));
  }
  write_text(c.output_dir / "sweep_tau.csv", csv.str());
  write_json(c.output_dir / "sweep_tau.json",
             {{"schema", "qdgate.sweep/1"}, {"qubit", c.sweep_qubit}, {"rows", rows}});
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Config: return kExitConfig;
    case ErrorKind::Commensurability: return kExitCommensurability;
    case ErrorKind::Ordering:
    case ErrorKind::Io: return kExitOrdering;
    default: return kExitPhysics;
  }
}

}  // namespace qdgate
