#include "sparsefl/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

namespace sparsefl {

using nlohmann::json;

// ---------------------------------------------------------------------------
// building blocks

int SystemConfig::n_states() const {
  if (kind == "vdp") return 2;
  if (kind == "chain") return chain_states;
  return static_cast<int>(f.size());
}

ControlAffineSystem SystemConfig::build() const {
  if (kind == "vdp") return vdp_system(theta, sigma, mu);
  if (kind == "chain") return chain_integrator(chain_states);
  if (kind != "custom") throw ConfigError("system.kind must be vdp, chain or custom, got '" + kind + "'");
  if (f.empty() || f.size() != g.size()) throw ConfigError("system: custom f and g must be non-empty and equal length");
  const int n = static_cast<int>(f.size());
  ControlAffineSystem sys;
  try {
    for (const auto& s : f) sys.f.push_back(parse(s, n));
    for (const auto& s : g) sys.g.push_back(parse(s, n));
    sys.c = parse(c.empty() ? "x1" : c, n);
    sys.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("system: ") + e.what());
  }
  return sys;
}

InputSignal ExcitationConfig::build(std::uint64_t seed) const {
  if (kind == "zero") return InputSignal::zero();
  if (kind == "constant") return InputSignal::constant(value);
  if (kind == "chirp") return InputSignal::chirp(chirp_amplitude, f0, f1, duration);
  if (kind != "sine_sum") throw ConfigError("excitation.kind must be zero, constant, sine_sum or chirp");
  std::vector<double> ph;
  if (phases) {
    ph = *phases;
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 2.0 * std::numbers::pi);
    for (size_t i = 0; i < amplitudes.size(); ++i) ph.push_back(dist(rng));
  }
  return InputSignal::sine_sum(amplitudes, frequencies, ph);
}

const char* to_string(ConstraintMode mode) {
  switch (mode) {
    case ConstraintMode::None: return "none";
    case ConstraintMode::PerSample: return "per_sample";
    case ConstraintMode::Aggregated: return "aggregated";
  }
  return "per_sample";
}

const char* to_string(SolverMode mode) {
  return mode == SolverMode::Penalty ? "penalty" : "alternating";
}

// ---------------------------------------------------------------------------
// validation

namespace {

bool finite_all(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

void PipelineConfig::validate() const {
  if (system.kind == "chain" && system.chain_states < 1) throw ConfigError("system.states must be >= 1");
  const ControlAffineSystem sys = system.build();
  const int n = sys.n();

  if (!(simulation.dt > 0.0) || !std::isfinite(simulation.dt)) throw ConfigError("simulation.dt must be positive");
  if (simulation.steps < 2) throw ConfigError("simulation.steps must be >= 2");
  if (static_cast<int>(simulation.x0.size()) != n || !finite_all(simulation.x0)) {
    throw ConfigError("simulation.x0 must have " + std::to_string(n) + " finite entries");
  }
  if (simulation.derivatives != "exact" && simulation.derivatives != "estimate") {
    throw ConfigError("simulation.derivatives must be exact or estimate");
  }

  const auto& ex = excitation;
  static const std::set<std::string> kinds{"zero", "constant", "sine_sum", "chirp"};
  if (!kinds.count(ex.kind)) throw ConfigError("excitation.kind must be zero, constant, sine_sum or chirp");
  if (ex.amplitudes.size() != ex.frequencies.size() || (ex.phases && ex.phases->size() != ex.amplitudes.size())) {
    throw ConfigError("excitation: amplitudes, frequencies and phases differ in length");
  }
  if (!finite_all(ex.amplitudes) || !finite_all(ex.frequencies) || (ex.phases && !finite_all(*ex.phases)) ||
      !std::isfinite(ex.value)) {
    throw ConfigError("excitation: non-finite parameter");
  }
  if (ex.kind == "chirp" && !(ex.duration > 0.0)) throw ConfigError("excitation.duration must be positive");

  try {
    library.validate(n);
    regression.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  if (controller.gains.has_value() == controller.poles.has_value()) {
    throw ConfigError("controller: give exactly one of gains or poles");
  }
  if (controller.gains && !finite_all(*controller.gains)) throw ConfigError("controller.gains must be finite");

  if (!(closed_loop.dt > 0.0) || !std::isfinite(closed_loop.dt)) throw ConfigError("closed_loop.dt must be positive");
  if (closed_loop.steps < 2) throw ConfigError("closed_loop.steps must be >= 2");
  std::set<std::string> names;
  for (const auto& s : closed_loop.scenarios) {
    if (s.name.empty() || s.name.find_first_not_of("abcdefghijklmnopqrstuvwxyz0123456789_-") != std::string::npos) {
      throw ConfigError("closed_loop: scenario names must be non-empty [a-z0-9_-]");
    }
    if (!names.insert(s.name).second) throw ConfigError("closed_loop: duplicate scenario '" + s.name + "'");
    if (static_cast<int>(s.x0.size()) != n || !finite_all(s.x0)) {
      throw ConfigError("closed_loop: scenario '" + s.name + "' x0 must have " + std::to_string(n) + " entries");
    }
  }
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

// ---------------------------------------------------------------------------
// JSON

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& section) {
  if (!obj.is_object()) throw ConfigError(section + ": expected an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw ConfigError(section + ": unknown key '" + item.key() + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& section) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception&) {
    throw ConfigError(section + "." + key + ": wrong type");
  }
}

std::complex<double> pole_from_json(const json& v) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_string()) {
    const auto parsed = parse_poles(v.get<std::string>());
    if (parsed.size() == 1) return parsed.front();
  }
  throw ConfigError("controller.poles: each pole must be a number or a string like \"-2+1i\"");
}

ConstraintMode constraint_mode_from(const std::string& s) {
  if (s == "none") return ConstraintMode::None;
  if (s == "per_sample") return ConstraintMode::PerSample;
  if (s == "aggregated") return ConstraintMode::Aggregated;
  throw ConfigError("regression.constraint_mode must be none, per_sample or aggregated");
}

SolverMode solver_from(const std::string& s) {
  if (s == "alternating") return SolverMode::AlternatingConstrained;
  if (s == "penalty") return SolverMode::Penalty;
  throw ConfigError("regression.solver must be alternating or penalty");
}

}  // namespace

nlohmann::json reference_to_json(const ReferenceSignal& ref) {
  switch (ref.kind) {
    case ReferenceSignal::Kind::Zero: return {{"kind", "zero"}};
    case ReferenceSignal::Kind::Constant: return {{"kind", "constant"}, {"value", ref.amplitude}};
    case ReferenceSignal::Kind::Sinusoid:
      return {{"kind", "sinusoid"}, {"amplitude", ref.amplitude}, {"frequency", ref.frequency}, {"phase", ref.phase}};
  }
  return {{"kind", "zero"}};
}

ReferenceSignal reference_from_json(const json& j) {
  const std::string sec = "reference";
  check_keys(j, {"kind", "value", "amplitude", "frequency", "phase"}, sec);
  std::string kind = "zero";
  read(j, "kind", kind, sec);
  if (kind == "zero") return ReferenceSignal::zero();
  if (kind == "constant") {
    double v = 0.0;
    read(j, "value", v, sec);
    return ReferenceSignal::constant(v);
  }
  if (kind == "sinusoid") {
    ReferenceSignal r = ReferenceSignal::sinusoid(1.0, 1.0, 0.0);
    read(j, "amplitude", r.amplitude, sec);
    read(j, "frequency", r.frequency, sec);
    read(j, "phase", r.phase, sec);
    if (!std::isfinite(r.amplitude) || !std::isfinite(r.frequency) || !std::isfinite(r.phase)) {
      throw ConfigError("reference: non-finite parameter");
    }
    return r;
  }
  throw ConfigError("reference.kind must be zero, constant or sinusoid");
}

nlohmann::json library_to_json(const LibrarySpec& spec) {
  return {{"poly_order", spec.poly_order},
          {"trig_orders", spec.trig_orders},
          {"include_constant", spec.include_constant},
          {"cross_trig", spec.cross_trig},
          {"output_state", spec.output_state + 1},
          {"output_poly_order", spec.output_poly_order}};
}

LibrarySpec library_from_json(const json& j, int n_states) {
  const std::string sec = "library";
  check_keys(j, {"poly_order", "trig_orders", "include_constant", "cross_trig", "output_state", "output_poly_order"},
             sec);
  LibrarySpec spec;
  int output_state = 1;
  read(j, "poly_order", spec.poly_order, sec);
  read(j, "trig_orders", spec.trig_orders, sec);
  read(j, "include_constant", spec.include_constant, sec);
  read(j, "cross_trig", spec.cross_trig, sec);
  read(j, "output_state", output_state, sec);
  read(j, "output_poly_order", spec.output_poly_order, sec);
  if (output_state < 1 || output_state > n_states) {
    throw ConfigError("library.output_state must be in 1.." + std::to_string(n_states));
  }
  spec.output_state = output_state - 1;
  return spec;
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig cfg;
  check_keys(j, {"system", "simulation", "excitation", "library", "regression", "controller", "closed_loop",
                 "output_dir", "seed"},
             "config");
  read(j, "output_dir", cfg.output_dir, "config");
  read(j, "seed", cfg.seed, "config");

  if (j.contains("system")) {
    const auto& s = j["system"];
    const std::string sec = "system";
    check_keys(s, {"kind", "theta", "sigma", "mu", "states", "f", "g", "c"}, sec);
    read(s, "kind", cfg.system.kind, sec);
    read(s, "theta", cfg.system.theta, sec);
    read(s, "sigma", cfg.system.sigma, sec);
    read(s, "mu", cfg.system.mu, sec);
    read(s, "states", cfg.system.chain_states, sec);
    read(s, "f", cfg.system.f, sec);
    read(s, "g", cfg.system.g, sec);
    read(s, "c", cfg.system.c, sec);
  }
  const int n = cfg.system.n_states();

  if (j.contains("simulation")) {
    const auto& s = j["simulation"];
    const std::string sec = "simulation";
    check_keys(s, {"dt", "steps", "x0", "derivatives"}, sec);
    read(s, "dt", cfg.simulation.dt, sec);
    read(s, "steps", cfg.simulation.steps, sec);
    read(s, "x0", cfg.simulation.x0, sec);
    read(s, "derivatives", cfg.simulation.derivatives, sec);
  } else if (n != 2) {
    cfg.simulation.x0.assign(static_cast<size_t>(n), 0.0);
  }

  if (j.contains("excitation")) {
    const auto& s = j["excitation"];
    const std::string sec = "excitation";
    check_keys(s, {"kind", "value", "amplitudes", "frequencies", "phases", "amplitude", "f0", "f1", "duration"}, sec);
    read(s, "kind", cfg.excitation.kind, sec);
    read(s, "value", cfg.excitation.value, sec);
    read(s, "amplitudes", cfg.excitation.amplitudes, sec);
    read(s, "frequencies", cfg.excitation.frequencies, sec);
    if (s.contains("phases")) {
      if (s["phases"].is_null()) {
        cfg.excitation.phases.reset();
      } else {
        std::vector<double> ph;
        read(s, "phases", ph, sec);
        cfg.excitation.phases = ph;
      }
    } else if (s.contains("amplitudes") || s.contains("frequencies")) {
      cfg.excitation.phases.reset();
    }
    read(s, "amplitude", cfg.excitation.chirp_amplitude, sec);
    read(s, "f0", cfg.excitation.f0, sec);
    read(s, "f1", cfg.excitation.f1, sec);
    read(s, "duration", cfg.excitation.duration, sec);
  }

  if (j.contains("library")) cfg.library = library_from_json(j["library"], std::max(n, 1));

  if (j.contains("regression")) {
    const auto& s = j["regression"];
    const std::string sec = "regression";
    check_keys(s, {"lambda", "max_outer_iters", "max_alt_iters", "constraint_tol", "coef_tol", "constraint_mode",
                   "solver", "penalty_weight", "relative_degree", "normalize_columns", "normalize_zeta", "rank_tol"},
               sec);
    auto& r = cfg.regression;
    read(s, "lambda", r.lambda, sec);
    read(s, "max_outer_iters", r.max_outer_iters, sec);
    read(s, "max_alt_iters", r.max_alt_iters, sec);
    read(s, "constraint_tol", r.constraint_tol, sec);
    read(s, "coef_tol", r.coef_tol, sec);
    std::string mode = to_string(r.constraint_mode);
    read(s, "constraint_mode", mode, sec);
    r.constraint_mode = constraint_mode_from(mode);
    std::string solver = to_string(r.solver_mode);
    read(s, "solver", solver, sec);
    r.solver_mode = solver_from(solver);
    read(s, "penalty_weight", r.penalty_weight, sec);
    read(s, "relative_degree", r.relative_degree, sec);
    read(s, "normalize_columns", r.normalize_columns, sec);
    read(s, "normalize_zeta", r.normalize_zeta, sec);
    read(s, "rank_tol", r.rank_tol, sec);
  }

  if (j.contains("controller")) {
    const auto& s = j["controller"];
    check_keys(s, {"gains", "poles"}, "controller");
    cfg.controller.gains.reset();
    if (s.contains("gains")) {
      std::vector<double> g;
      read(s, "gains", g, "controller");
      cfg.controller.gains = g;
    }
    if (s.contains("poles")) {
      if (!s["poles"].is_array()) throw ConfigError("controller.poles must be an array");
      std::vector<std::complex<double>> poles;
      for (const auto& p : s["poles"]) poles.push_back(pole_from_json(p));
      cfg.controller.poles = poles;
    }
  }

  if (j.contains("closed_loop")) {
    const auto& s = j["closed_loop"];
    const std::string sec = "closed_loop";
    check_keys(s, {"dt", "steps", "scenarios"}, sec);
    read(s, "dt", cfg.closed_loop.dt, sec);
    read(s, "steps", cfg.closed_loop.steps, sec);
    if (s.contains("scenarios")) {
      if (!s["scenarios"].is_array()) throw ConfigError("closed_loop.scenarios must be an array");
      cfg.closed_loop.scenarios.clear();
      for (const auto& sc : s["scenarios"]) {
        check_keys(sc, {"name", "x0", "reference"}, "closed_loop.scenarios");
        ScenarioConfig scenario;
        read(sc, "name", scenario.name, "closed_loop.scenarios");
        scenario.x0.assign(static_cast<size_t>(n), 0.0);
        read(sc, "x0", scenario.x0, "closed_loop.scenarios");
        if (sc.contains("reference")) scenario.reference = reference_from_json(sc["reference"]);
        cfg.closed_loop.scenarios.push_back(std::move(scenario));
      }
    }
  }
  if (n != 2 && !(j.contains("closed_loop") && j["closed_loop"].contains("scenarios"))) {
    for (auto& s : cfg.closed_loop.scenarios) s.x0 = cfg.simulation.x0;
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

nlohmann::json config_to_json(const PipelineConfig& cfg) {
  json j;
  json sys = {{"kind", cfg.system.kind}};
  if (cfg.system.kind == "vdp") {
    sys["theta"] = cfg.system.theta;
    sys["sigma"] = cfg.system.sigma;
    sys["mu"] = cfg.system.mu;
  } else if (cfg.system.kind == "chain") {
    sys["states"] = cfg.system.chain_states;
  } else {
    sys["f"] = cfg.system.f;
    sys["g"] = cfg.system.g;
    sys["c"] = cfg.system.c;
  }
  j["system"] = sys;
  j["simulation"] = {{"dt", cfg.simulation.dt},
                     {"steps", cfg.simulation.steps},
                     {"x0", cfg.simulation.x0},
                     {"derivatives", cfg.simulation.derivatives}};
  const auto& ex = cfg.excitation;
  j["excitation"] = {{"kind", ex.kind},
                     {"value", ex.value},
                     {"amplitudes", ex.amplitudes},
                     {"frequencies", ex.frequencies},
                     {"phases", ex.phases ? json(*ex.phases) : json(nullptr)},
                     {"amplitude", ex.chirp_amplitude},
                     {"f0", ex.f0},
                     {"f1", ex.f1},
                     {"duration", ex.duration}};
  j["library"] = library_to_json(cfg.library);
  const auto& r = cfg.regression;
  j["regression"] = {{"lambda", r.lambda},
                     {"max_outer_iters", r.max_outer_iters},
                     {"max_alt_iters", r.max_alt_iters},
                     {"constraint_tol", r.constraint_tol},
                     {"coef_tol", r.coef_tol},
                     {"constraint_mode", to_string(r.constraint_mode)},
                     {"solver", to_string(r.solver_mode)},
                     {"penalty_weight", r.penalty_weight},
                     {"relative_degree", r.relative_degree},
                     {"normalize_columns", r.normalize_columns},
                     {"normalize_zeta", r.normalize_zeta},
                     {"rank_tol", r.rank_tol}};
  json ctrl = json::object();
  if (cfg.controller.gains) ctrl["gains"] = *cfg.controller.gains;
  if (cfg.controller.poles) {
    json poles = json::array();
    for (const auto& p : *cfg.controller.poles) poles.push_back(format_complex(p));
    ctrl["poles"] = poles;
  }
  j["controller"] = ctrl;
  json scenarios = json::array();
  for (const auto& s : cfg.closed_loop.scenarios) {
    scenarios.push_back({{"name", s.name}, {"x0", s.x0}, {"reference", reference_to_json(s.reference)}});
  }
  j["closed_loop"] = {{"dt", cfg.closed_loop.dt}, {"steps", cfg.closed_loop.steps}, {"scenarios", scenarios}};
  j["output_dir"] = cfg.output_dir;
  j["seed"] = cfg.seed;
  return j;
}

}  // namespace sparsefl
