#include "sparsefl/serialize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sparsefl/config.hpp"

namespace sparsefl {

using nlohmann::json;

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json matrix_to_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw FormatError(what + ": expected " + std::to_string(rows) + " rows");
  }
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw FormatError(what + ": row " + std::to_string(i) + " must have " + std::to_string(cols) + " entries");
    }
    for (Eigen::Index c = 0; c < cols; ++c) M(i, c) = row[static_cast<size_t>(c)].get<double>();
  }
  return M;
}

json strings(const std::vector<Expression>& es, const Symbols& sym) {
  json out = json::array();
  for (const auto& e : es) out.push_back(format(e, sym));
  return out;
}

std::vector<Expression> parse_list(const json& j, const Symbols& sym, const std::string& what) {
  if (!j.is_array()) throw FormatError(what + ": expected an array of expressions");
  std::vector<Expression> out;
  for (const auto& s : j) out.push_back(parse(s.get<std::string>(), sym));
  return out;
}

json diagnostics_to_json(const RegressionDiagnostics& d) {
  return {{"state_residuals", std::vector<double>(d.state_residuals.data(),
                                                  d.state_residuals.data() + d.state_residuals.size())},
          {"output_residual", d.output_residual},
          {"max_constraint_residual", d.max_constraint_residual},
          {"aggregated_constraint_residual", d.aggregated_constraint_residual},
          {"active_xi_tilde", d.active_xi_tilde},
          {"active_xi_hat", d.active_xi_hat},
          {"active_zeta", d.active_zeta},
          {"alt_iterations", d.alt_iterations},
          {"converged", d.converged},
          {"infeasible", d.infeasible},
          {"warnings", d.warnings}};
}

RegressionDiagnostics diagnostics_from_json(const json& j) {
  RegressionDiagnostics d;
  const auto res = j.value("state_residuals", std::vector<double>{});
  d.state_residuals = Eigen::Map<const Eigen::VectorXd>(res.data(), static_cast<Eigen::Index>(res.size()));
  d.output_residual = j.value("output_residual", 0.0);
  d.max_constraint_residual = j.value("max_constraint_residual", 0.0);
  d.aggregated_constraint_residual = j.value("aggregated_constraint_residual", 0.0);
  d.active_xi_tilde = j.value("active_xi_tilde", std::vector<int>{});
  d.active_xi_hat = j.value("active_xi_hat", std::vector<int>{});
  d.active_zeta = j.value("active_zeta", 0);
  d.alt_iterations = j.value("alt_iterations", 0);
  d.converged = j.value("converged", false);
  d.infeasible = j.value("infeasible", false);
  d.warnings = j.value("warnings", std::vector<std::string>{});
  return d;
}

void check_same(const Expression& stored, const Expression& rebuilt, const std::string& what) {
  double magnitude = 0.0;
  for (const auto& t : rebuilt.terms()) magnitude = std::max(magnitude, std::abs(t.coefficient));
  if (max_coefficient_difference(stored, rebuilt) > 1e-9 * (1.0 + magnitude)) {
    throw FormatError(what + " does not match the stored coefficients");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// model

json model_to_json(const SparseModel& model, const DictionarySet& ds) {
  const Symbols sym = Symbols::states(ds.n_states);
  json j;
  j["n_states"] = ds.n_states;
  j["library"] = library_to_json(ds.spec);
  j["entries"] = {{"theta_f", strings(ds.theta_f_entries, sym)},
                  {"theta_g", strings(ds.theta_g_entries, sym)},
                  {"phi", strings(ds.phi_entries, sym)}};
  j["Xi_tilde"] = matrix_to_json(model.Xi_tilde);
  j["Xi_hat"] = matrix_to_json(model.Xi_hat);
  j["zeta"] = std::vector<double>(model.zeta.data(), model.zeta.data() + model.zeta.size());
  j["output_scale"] = model.output_scale;
  j["f"] = strings(model.f, sym);
  j["g"] = strings(model.g, sym);
  j["c"] = format(model.c, sym);
  j["diagnostics"] = diagnostics_to_json(model.diagnostics);
  return j;
}

StoredModel model_from_json(const json& j) {
  try {
    for (const char* key : {"n_states", "library", "Xi_tilde", "Xi_hat", "zeta", "f", "g", "c"}) {
      if (!j.contains(key)) throw FormatError(std::string("model: missing '") + key + "'");
    }
    const int n = j["n_states"].get<int>();
    if (n < 1) throw FormatError("model: n_states must be >= 1");
    StoredModel out;
    out.entries = build_entries(library_from_json(j["library"], n), n);
    const auto& ds = out.entries;
    const auto px = static_cast<Eigen::Index>(ds.theta_f_entries.size());
    const auto pu = static_cast<Eigen::Index>(ds.theta_g_entries.size());
    const auto py = static_cast<Eigen::Index>(ds.phi_entries.size());
    SparseModel& m = out.model;
    m.Xi_tilde = matrix_from_json(j["Xi_tilde"], px, n, "Xi_tilde");
    m.Xi_hat = matrix_from_json(j["Xi_hat"], pu, n, "Xi_hat");
    const auto zeta = j["zeta"].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(zeta.size()) != py) throw FormatError("zeta: expected " + std::to_string(py) + " entries");
    m.zeta = Eigen::Map<const Eigen::VectorXd>(zeta.data(), py);
    m.output_scale = j.value("output_scale", 1.0);
    if (!m.Xi_tilde.allFinite() || !m.Xi_hat.allFinite() || !m.zeta.allFinite() || !std::isfinite(m.output_scale)) {
      throw FormatError("model: non-finite coefficient");
    }
    reconstruct(ds, m);

    const Symbols sym = Symbols::states(n);
    const auto f = parse_list(j["f"], sym, "f");
    const auto g = parse_list(j["g"], sym, "g");
    if (static_cast<int>(f.size()) != n || static_cast<int>(g.size()) != n) throw FormatError("model: f/g length mismatch");
    for (int l = 0; l < n; ++l) {
      check_same(f[static_cast<size_t>(l)], m.f[static_cast<size_t>(l)], "f" + std::to_string(l + 1));
      check_same(g[static_cast<size_t>(l)], m.g[static_cast<size_t>(l)], "g" + std::to_string(l + 1));
    }
    check_same(parse(j["c"].get<std::string>(), sym), m.c, "c");
    if (j.contains("diagnostics")) m.diagnostics = diagnostics_from_json(j["diagnostics"]);
    return out;
  } catch (const json::exception& e) {
    throw FormatError(std::string("model: ") + e.what());
  } catch (const ExpressionError& e) {
    throw FormatError(std::string("model: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("model: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// controller

json controller_to_json(const ControllerSpec& spec) {
  const Symbols states = Symbols::states(spec.n);
  const Symbols ext = spec.symbols();
  json poles = json::array();
  for (const auto& p : spec.poles) poles.push_back(format_complex(p));
  return {{"r", spec.r},
          {"n_states", spec.n},
          {"gains", spec.gains},
          {"poles", poles},
          {"alpha", format(spec.alpha, states)},
          {"beta", format(spec.beta, states)},
          {"output_chain", strings(spec.output_chain, states)},
          {"numerator", format(spec.numerator, ext)},
          {"law", format(spec.law, ext)},
          {"beta_is_constant", spec.beta_is_constant},
          {"display", spec.display()},
          {"warnings", spec.warnings}};
}

ControllerSpec controller_from_json(const json& j) {
  try {
    ControllerSpec spec;
    spec.r = j.at("r").get<int>();
    spec.n = j.at("n_states").get<int>();
    if (spec.r < 1 || spec.n < 1) throw FormatError("controller: r and n_states must be >= 1");
    spec.gains = j.at("gains").get<std::vector<double>>();
    if (static_cast<int>(spec.gains.size()) != spec.r) throw FormatError("controller: gains length differs from r");
    for (const auto& p : j.value("poles", json::array())) {
      const auto parsed = parse_poles(p.get<std::string>());
      spec.poles.insert(spec.poles.end(), parsed.begin(), parsed.end());
    }
    const Symbols states = Symbols::states(spec.n);
    spec.alpha = parse(j.at("alpha").get<std::string>(), states);
    spec.beta = parse(j.at("beta").get<std::string>(), states);
    if (spec.beta.empty()) throw FormatError("controller: beta is zero");
    spec.output_chain = parse_list(j.at("output_chain"), states, "output_chain");
    if (static_cast<int>(spec.output_chain.size()) != spec.r) throw FormatError("controller: output_chain length differs from r");
    const Symbols ext = spec.symbols();
    spec.numerator = parse(j.at("numerator").get<std::string>(), ext);
    spec.law = parse(j.at("law").get<std::string>(), ext);
    spec.beta_is_constant = spec.beta.is_constant();
    const Expression expected =
        spec.beta_is_constant ? scale(spec.numerator, 1.0 / spec.beta.constant_value()) : spec.numerator;
    check_same(spec.law, expected, "controller law");
    spec.warnings = j.value("warnings", std::vector<std::string>{});
    return spec;
  } catch (const json::exception& e) {
    throw FormatError(std::string("controller: ") + e.what());
  } catch (const ExpressionError& e) {
    throw FormatError(std::string("controller: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("controller: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Lie chain

json lie_to_json(const LieChain& chain, int n_states) {
  const Symbols sym = Symbols::states(n_states);
  json j;
  j["c"] = format(chain.c, sym);
  j["lf"] = strings(chain.lf_powers, sym);
  j["lg_lf"] = strings(chain.lg_mixed, sym);
  j["relative_degree"] = chain.relative_degree ? json(*chain.relative_degree) : json(nullptr);
  j["internal_dynamics"] = chain.relative_degree ? json(*chain.relative_degree < n_states) : json(nullptr);
  return j;
}

std::string lie_report(const LieChain& chain, const ControlAffineSystem& sys) {
  std::ostringstream out;
  out << "Output chain\n";
  for (size_t k = 0; k < chain.lf_powers.size(); ++k) {
    out << "  Lf^" << k << " c = " << format(chain.lf_powers[k]) << "\n";
  }
  for (size_t k = 0; k < chain.lg_mixed.size(); ++k) {
    out << "  Lg Lf^" << k << " c = " << format(chain.lg_mixed[k]) << "\n";
  }
  if (!chain.relative_degree) {
    out << "relative degree: undefined (input never reaches the output)\n";
    return out.str();
  }
  out << "relative degree: " << *chain.relative_degree << "\n";
  try {
    const NormalForm nf = normal_form(sys, chain);
    out << "Normal form\n";
    for (const auto& line : nf.display) out << "  " << line << "\n";
  } catch (const RelativeDegreeError& e) {
    out << "normal form unavailable: " << e.what() << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// tables and reports

std::string coefficient_table_csv(const SparseModel& model, const DictionarySet& ds) {
  const int n = ds.n_states;
  std::vector<std::string> labels;
  auto add_label = [&](const Expression& e) {
    const std::string s = format(e);
    if (std::find(labels.begin(), labels.end(), s) == labels.end()) labels.push_back(s);
  };
  for (const auto& e : ds.theta_f_entries) add_label(e);
  for (const auto& e : ds.theta_g_entries) add_label(e);
  for (const auto& e : ds.phi_entries) add_label(e);

  auto index_of = [](const std::vector<Expression>& entries, const std::string& label) -> Eigen::Index {
    for (size_t i = 0; i < entries.size(); ++i) {
      if (format(entries[i]) == label) return static_cast<Eigen::Index>(i);
    }
    return -1;
  };

  std::ostringstream out;
  out << "term";
  for (int l = 1; l <= n; ++l) out << ",xi_tilde_" << l;
  for (int l = 1; l <= n; ++l) out << ",xi_hat_" << l;
  out << ",zeta\n";
  for (const auto& label : labels) {
    out << label;
    const Eigen::Index jf = index_of(ds.theta_f_entries, label);
    const Eigen::Index jg = index_of(ds.theta_g_entries, label);
    const Eigen::Index jp = index_of(ds.phi_entries, label);
    for (int l = 0; l < n; ++l) out << "," << (jf >= 0 ? shortest(model.Xi_tilde(jf, l)) : "");
    for (int l = 0; l < n; ++l) out << "," << (jg >= 0 ? shortest(model.Xi_hat(jg, l)) : "");
    out << "," << (jp >= 0 ? shortest(model.zeta(jp)) : "") << "\n";
  }
  return out.str();
}

std::string discovered_equations(const SparseModel& model) {
  std::ostringstream out;
  for (size_t l = 0; l < model.f.size(); ++l) {
    out << "x" << l + 1 << "' = " << format(model.f[l]);
    if (!model.g[l].empty()) out << " + (" << format(model.g[l]) << ")*u";
    out << "\n";
  }
  out << "y = " << format(model.c) << "\n";
  return out.str();
}

std::string identification_report(const SparseModel& model, const DictionarySet& ds, bool derivatives_estimated) {
  const auto& d = model.diagnostics;
  std::ostringstream out;
  out << "Discovered equations after thresholding\n" << discovered_equations(model) << "\n";
  out << "library: " << ds.theta_f_entries.size() << " drift entries, " << ds.theta_g_entries.size()
      << " input entries, " << ds.phi_entries.size() << " output entries\n";
  out << "derivatives: " << (derivatives_estimated ? "estimated by finite differences" : "taken from data") << "\n";
  out << "output scale: " << shortest(model.output_scale) << "\n";
  out << "active terms: " << model.active_count() << "\n";
  out << "max constraint residual: " << shortest(d.max_constraint_residual) << "\n";
  out << "aggregated constraint residual: " << shortest(d.aggregated_constraint_residual) << "\n";
  out << "state residual norms:";
  for (Eigen::Index l = 0; l < d.state_residuals.size(); ++l) out << " " << shortest(d.state_residuals(l));
  out << "\noutput residual norm: " << shortest(d.output_residual) << "\n";
  out << "alternations: " << d.alt_iterations << (d.converged ? " (converged)" : " (not converged)") << "\n";
  if (d.infeasible) out << "INFEASIBLE\n";
  for (const auto& w : d.warnings) out << "warning: " << w << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// files

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const json& j, const std::string& path) { write_text_file(j.dump(2) + "\n", path); }

void write_text_file(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace sparsefl
