#include "sparsefl/dictionary.hpp"

#include <functional>
#include <stdexcept>

namespace sparsefl {

void LibrarySpec::validate(int n_states) const {
  if (poly_order < 0) throw std::invalid_argument("library: poly_order must be >= 0");
  if (poly_order < 1 && trig_orders.empty()) {
    throw std::invalid_argument("library: poly_order must be >= 1 when no trig orders are given");
  }
  for (int j : trig_orders) {
    if (j < 1) throw std::invalid_argument("library: trig orders must be positive");
  }
  if (output_state < 0 || output_state >= n_states) throw std::invalid_argument("library: output_state out of range");
  if (output_poly_order < 1) throw std::invalid_argument("library: output_poly_order must be >= 1");
}

namespace {

// All exponent vectors of total degree `deg`, larger leading exponents first.
void monomials_of_degree(int n, int deg, std::vector<std::vector<int>>& out) {
  std::vector<int> e(static_cast<size_t>(n), 0);
  std::function<void(int, int)> rec = [&](int var, int left) {
    if (var == n - 1) {
      e[static_cast<size_t>(var)] = left;
      out.push_back(e);
      return;
    }
    for (int p = left; p >= 0; --p) {
      e[static_cast<size_t>(var)] = p;
      rec(var + 1, left - p);
    }
  };
  rec(0, deg);
}

}  // namespace

std::vector<Expression> drift_library(const LibrarySpec& spec, int n) {
  std::vector<Expression> entries;
  if (spec.include_constant) entries.push_back(Expression::constant(n, 1.0));
  for (int deg = 1; deg <= spec.poly_order; ++deg) {
    std::vector<std::vector<int>> exps;
    monomials_of_degree(n, deg, exps);
    for (auto& e : exps) {
      Term t;
      t.coefficient = 1.0;
      t.exponents = e;
      entries.emplace_back(n, std::vector<Term>{t});
    }
  }
  for (int j : spec.trig_orders) {
    for (int i = 0; i < n; ++i) {
      entries.push_back(Expression::trig(n, TrigKind::Sin, j, i));
      entries.push_back(Expression::trig(n, TrigKind::Cos, j, i));
    }
  }
  if (spec.cross_trig) {
    for (int j : spec.trig_orders) {
      for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
          for (auto ka : {TrigKind::Sin, TrigKind::Cos}) {
            for (auto kb : {TrigKind::Sin, TrigKind::Cos}) {
              entries.push_back(Expression::trig(n, ka, j, a) * Expression::trig(n, kb, j, b));
            }
          }
        }
      }
    }
  }
  return entries;
}

DictionarySet build_entries(const LibrarySpec& spec, int n) {
  spec.validate(n);
  DictionarySet ds;
  ds.spec = spec;
  ds.n_states = n;
  ds.theta_f_entries = drift_library(spec, n);
  const Expression u = Expression::input(n);
  for (const auto& e : ds.theta_f_entries) ds.theta_g_entries.push_back(e * u);
  for (int p = 0; p <= spec.output_poly_order; ++p) {
    ds.phi_entries.push_back(p == 0 ? Expression::constant(n, 1.0) : Expression::variable(n, spec.output_state, p));
  }
  return ds;
}

Eigen::MatrixXd evaluate_entries(const std::vector<Expression>& entries, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(entries.size()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::VectorXd row = X.row(i).transpose();
    for (size_t j = 0; j < entries.size(); ++j) out(i, static_cast<Eigen::Index>(j)) = evaluate(entries[j], row);
  }
  return out;
}

DictionarySet build_dictionaries(const LibrarySpec& spec, const Dataset& d) {
  d.validate();
  DictionarySet ds = build_entries(spec, static_cast<int>(d.states()));
  ds.ThetaF = evaluate_entries(ds.theta_f_entries, d.X);
  // Theta_g columns are the drift columns scaled by u, row by row.
  ds.ThetaG = d.U.asDiagonal() * ds.ThetaF;
  ds.Phi = evaluate_entries(ds.phi_entries, d.X);

  const Eigen::Index widest = std::max({ds.px() + ds.pu(), ds.py()});
  if (d.samples() < widest) {
    ds.warnings.push_back("underdetermined: " + std::to_string(d.samples()) + " samples for " +
                          std::to_string(widest) + " library columns");
  }
  if (d.U.isZero(0.0)) ds.warnings.push_back("input is identically zero: input library and constraint are vacuous");
  return ds;
}

std::vector<Expression> gradient_dictionary(const DictionarySet& ds) {
  std::vector<Expression> out;
  out.reserve(ds.phi_entries.size());
  for (const auto& e : ds.phi_entries) out.push_back(partial(e, ds.spec.output_state));
  return out;
}

Eigen::MatrixXd evaluate_L_matrix(const DictionarySet& ds, const Dataset& d) {
  return evaluate_entries(gradient_dictionary(ds), d.X);
}

}  // namespace sparsefl
