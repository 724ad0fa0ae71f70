#include "sparsefl/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <functional>
#include <ostream>
#include <sstream>

#include "sparsefl/serialize.hpp"

namespace sparsefl {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kTrackingWindowStart = 5.0;

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
}

/// Raised after the stage's files are written when the outcome still maps
/// to a non-zero exit code.
struct StageFailure {
  int code;
  std::string message;
};

int guarded(const std::string& stage, std::ostream& log, const std::function<void()>& body) {
  auto report = [&](const std::string& what) { log << "[" << stage << "] " << what << "\n"; };
  try {
    body();
    return kExitOk;
  } catch (const StageFailure& f) {
    report(f.message);
    return f.code;
  } catch (const ConfigError& e) {
    report(std::string("config error: ") + e.what());
    return kExitConfig;
  } catch (const RegressionError& e) {
    report(std::string("identification failed: ") + e.what());
    return kExitInfeasible;
  } catch (const DivergenceError& e) {
    report(e.what());
    return kExitDivergence;
  } catch (const RelativeDegreeError& e) {
    report(std::string("relative degree: ") + e.what());
    return kExitRelativeDegree;
  } catch (const std::exception& e) {
    report(e.what());
    return kExitFailure;
  }
}

std::string csv_table(const std::vector<std::string>& header, const std::vector<const Eigen::VectorXd*>& columns) {
  std::ostringstream out;
  for (size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << "\n";
  const Eigen::Index rows = columns.empty() ? 0 : columns.front()->size();
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << shortest((*columns[c])(i));
    out << "\n";
  }
  return out.str();
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// ---------------------------------------------------------------------------
// stage bodies

void simulate_body(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log) {
  const ControlAffineSystem sys = cfg.system.build();
  const InputSignal input = cfg.excitation.build(cfg.seed);
  Dataset d = integrate(sys, to_vector(cfg.simulation.x0), input, cfg.simulation.dt, cfg.simulation.steps);
  if (cfg.excitation.kind == "zero" && cfg.regression.constraint_mode != ConstraintMode::None) {
    log << "[simulate] warning: zero excitation makes the input-channel constraint vacuous\n";
  }
  if (cfg.simulation.derivatives == "estimate") d.Xdot.reset();
  ensure_dir(out_dir);
  save_csv(d, path_in(out_dir, "dataset.csv"));
}

void write_overlay(const PipelineConfig& cfg, const SparseModel& model, const std::string& out_dir,
                   std::vector<std::string>& notes) {
  const ControlAffineSystem truth = cfg.system.build();
  const InputSignal input = cfg.excitation.build(cfg.seed);
  const Eigen::VectorXd x0 = to_vector(cfg.simulation.x0);
  const Dataset a = integrate(truth, x0, input, cfg.simulation.dt, cfg.simulation.steps);
  Dataset b;
  try {
    b = integrate(model.system(), x0, input, cfg.simulation.dt, cfg.simulation.steps);
  } catch (const DivergenceError& e) {
    notes.push_back(std::string("overlay skipped: identified model diverged (") + e.what() + ")");
    return;
  }
  std::vector<std::string> header{"t", "u"};
  std::vector<Eigen::VectorXd> cols{a.times, a.U};
  for (Eigen::Index l = 0; l < a.states(); ++l) {
    header.push_back("x" + std::to_string(l + 1) + "_true");
    cols.push_back(a.X.col(l));
  }
  for (Eigen::Index l = 0; l < b.states(); ++l) {
    header.push_back("x" + std::to_string(l + 1) + "_model");
    cols.push_back(b.X.col(l));
  }
  std::vector<const Eigen::VectorXd*> ptrs;
  for (const auto& c : cols) ptrs.push_back(&c);
  write_text_file(csv_table(header, ptrs), path_in(out_dir, "overlay.csv"));
}

void identify_body(const PipelineConfig& cfg, const std::string& data_path, const std::string& out_dir) {
  Dataset d = load_csv(data_path);
  bool estimated = false;
  if (!d.Xdot || cfg.simulation.derivatives == "estimate") {
    d = estimate_derivatives(d, true);
    estimated = true;
  }
  if (cfg.library.output_state >= d.states()) {
    throw ConfigError("library.output_state exceeds the dataset's state count");
  }
  const DictionarySet ds = build_dictionaries(cfg.library, d);
  const SparseModel model = solve(ds, d, cfg.regression);

  ensure_dir(out_dir);
  write_json_file(model_to_json(model, ds), path_in(out_dir, "model.json"));
  write_text_file(coefficient_table_csv(model, ds), path_in(out_dir, "coefficients.csv"));
  std::vector<std::string> notes;
  if (cfg.system.n_states() == d.states()) write_overlay(cfg, model, out_dir, notes);
  std::string report = identification_report(model, ds, estimated);
  for (const auto& n : notes) report += "note: " + n + "\n";
  write_text_file(report, path_in(out_dir, "report.txt"));

  if (model.diagnostics.infeasible) {
    throw StageFailure{kExitInfeasible, "infeasible: " + model.diagnostics.warnings.back()};
  }
}

void lie_body(const std::string& model_path, const std::string& out_dir) {
  const StoredModel stored = model_from_json(read_json_file(model_path));
  const ControlAffineSystem sys = stored.model.system();
  const LieChain chain = relative_degree(sys);
  ensure_dir(out_dir);
  write_json_file(lie_to_json(chain, sys.n()), path_in(out_dir, "lie.json"));
  write_text_file(lie_report(chain, sys), path_in(out_dir, "lie.txt"));
  normal_form(sys, chain);  // throws when r is undefined or below n
}

void synthesize_body(const PipelineConfig& cfg, const std::string& model_path, const std::string& out_dir,
                     std::ostream& log) {
  const StoredModel stored = model_from_json(read_json_file(model_path));
  const ControlAffineSystem sys = stored.model.system();
  const LieChain chain = relative_degree(sys);
  const ControllerSpec spec = cfg.controller.poles ? synthesize_from_poles(chain, sys.n(), *cfg.controller.poles)
                                                   : synthesize(chain, sys.n(), *cfg.controller.gains);
  for (const auto& w : spec.warnings) log << "[synthesize] warning: " << w << "\n";
  ensure_dir(out_dir);
  write_json_file(controller_to_json(spec), path_in(out_dir, "controller.json"));
  std::ostringstream txt;
  txt << "u = " << spec.display() << "\n";
  txt << "expanded: u = " << format(spec.law, spec.symbols()) << "\n";
  txt << "gains:";
  for (double a : spec.gains) txt << " " << shortest(a);
  txt << "\n";
  write_text_file(txt.str(), path_in(out_dir, "controller.txt"));
}

void closedloop_body(const PipelineConfig& cfg, const std::string& controller_path, const std::string& out_dir,
                     std::ostream& log) {
  const ControllerSpec spec = controller_from_json(read_json_file(controller_path));
  const ControlAffineSystem plant = cfg.system.build();
  for (const auto& w : spec.warnings) log << "[closedloop] warning: " << w << "\n";
  ensure_dir(out_dir);
  json results = json::array();
  for (const auto& sc : cfg.closed_loop.scenarios) {
    const auto res =
        simulate_closed_loop(plant, spec, sc.reference, to_vector(sc.x0), cfg.closed_loop.dt, cfg.closed_loop.steps);
    const Dataset& d = res.data;

    std::vector<std::string> header{"t"};
    std::vector<Eigen::VectorXd> cols{d.times};
    for (Eigen::Index l = 0; l < d.states(); ++l) {
      header.push_back("x" + std::to_string(l + 1));
      cols.push_back(d.X.col(l));
    }
    for (int k = 0; k < spec.r; ++k) {
      Eigen::VectorXd rk(d.samples());
      for (Eigen::Index i = 0; i < d.samples(); ++i) rk(i) = sc.reference.derivative(k, d.times(i));
      header.push_back(reference_name(k));
      cols.push_back(rk);
    }
    std::vector<const Eigen::VectorXd*> ptrs;
    for (const auto& c : cols) ptrs.push_back(&c);
    write_text_file(csv_table(header, ptrs), path_in(out_dir, sc.name + "_states.csv"));
    write_text_file(csv_table({"t", "u"}, {&d.times, &d.U}), path_in(out_dir, sc.name + "_input.csv"));
    const Eigen::VectorXd err = d.Y - res.reference;
    write_text_file(csv_table({"t", "y", "r", "e"}, {&d.times, &d.Y, &res.reference, &err}),
                    path_in(out_dir, sc.name + "_output.csv"));

    double tail = 0.0;
    for (Eigen::Index i = 0; i < d.samples(); ++i) {
      if (d.times(i) >= kTrackingWindowStart) tail = std::max(tail, std::abs(err(i)));
    }
    results.push_back({{"name", sc.name},
                       {"final_time", d.times(d.samples() - 1)},
                       {"final_state_norm", d.X.row(d.samples() - 1).norm()},
                       {"max_abs_input", d.U.cwiseAbs().maxCoeff()},
                       {"max_abs_error_after_5s", tail}});
  }
  write_json_file({{"scenarios", results}}, path_in(out_dir, "closedloop.json"));
}

void summary_body(const PipelineConfig& cfg, const std::string& out_dir) {
  const StoredModel stored = model_from_json(read_json_file(path_in(out_dir, "model.json")));
  const json lie = read_json_file(path_in(out_dir, "lie.json"));
  const json cl = read_json_file(path_in(out_dir, "closedloop.json"));
  const ControlAffineSystem truth = cfg.system.build();
  const SparseModel& m = stored.model;

  json errors = json::object();
  double worst = 0.0;
  for (int l = 0; l < truth.n(); ++l) {
    const double ef = max_coefficient_difference(m.f[static_cast<size_t>(l)], truth.f[static_cast<size_t>(l)]);
    const double eg = max_coefficient_difference(m.g[static_cast<size_t>(l)], truth.g[static_cast<size_t>(l)]);
    errors["f" + std::to_string(l + 1)] = ef;
    errors["g" + std::to_string(l + 1)] = eg;
    worst = std::max({worst, ef, eg});
  }
  const double ec = max_coefficient_difference(m.c, truth.c);
  errors["c"] = ec;
  worst = std::max(worst, ec);

  json summary = {{"coefficient_errors", errors},
                  {"max_coefficient_error", worst},
                  {"relative_degree", lie["relative_degree"]},
                  {"max_constraint_residual", m.diagnostics.max_constraint_residual},
                  {"active_terms", m.active_count()},
                  {"closed_loop", cl["scenarios"]}};
  write_json_file(summary, path_in(out_dir, "summary.json"));

  std::ostringstream txt;
  txt << discovered_equations(m);
  txt << "max coefficient error vs true system: " << shortest(worst) << "\n";
  txt << "relative degree: " << (lie["relative_degree"].is_null() ? "undefined" : lie["relative_degree"].dump())
      << "\n";
  txt << "max constraint residual: " << shortest(m.diagnostics.max_constraint_residual) << "\n";
  for (const auto& s : cl["scenarios"]) {
    txt << s["name"].get<std::string>() << ": final |x| = " << shortest(s["final_state_norm"].get<double>())
        << ", max |u| = " << shortest(s["max_abs_input"].get<double>())
        << ", max |y - r| for t >= 5 = " << shortest(s["max_abs_error_after_5s"].get<double>()) << "\n";
  }
  write_text_file(txt.str(), path_in(out_dir, "summary.txt"));
}

}  // namespace

int cmd_simulate(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log) {
  return guarded("simulate", log, [&] { simulate_body(cfg, out_dir, log); });
}

int cmd_identify(const PipelineConfig& cfg, const std::string& data_path, const std::string& out_dir,
                 std::ostream& log) {
  return guarded("identify", log, [&] { identify_body(cfg, data_path, out_dir); });
}

int cmd_lie(const std::string& model_path, const std::string& out_dir, std::ostream& log) {
  return guarded("lie", log, [&] { lie_body(model_path, out_dir); });
}

int cmd_synthesize(const PipelineConfig& cfg, const std::string& model_path, const std::string& out_dir,
                   std::ostream& log) {
  return guarded("synthesize", log, [&] { synthesize_body(cfg, model_path, out_dir, log); });
}

int cmd_closedloop(const PipelineConfig& cfg, const std::string& controller_path, const std::string& out_dir,
                   std::ostream& log) {
  return guarded("closedloop", log, [&] { closedloop_body(cfg, controller_path, out_dir, log); });
}

int cmd_pipeline(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& log) {
  int code = cmd_simulate(cfg, out_dir, log);
  if (code == kExitOk) code = cmd_identify(cfg, path_in(out_dir, "dataset.csv"), out_dir, log);
  if (code == kExitOk) code = cmd_lie(path_in(out_dir, "model.json"), out_dir, log);
  if (code == kExitOk) code = cmd_synthesize(cfg, path_in(out_dir, "model.json"), out_dir, log);
  if (code == kExitOk) code = cmd_closedloop(cfg, path_in(out_dir, "controller.json"), out_dir, log);
  if (code == kExitOk) code = guarded("summary", log, [&] { summary_body(cfg, out_dir); });
  return code;
}

}  // namespace sparsefl
