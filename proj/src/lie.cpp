#include "sparsefl/lie.hpp"

namespace sparsefl {

Expression lie_derivative(const Expression& e, const std::vector<Expression>& field) {
  if (static_cast<int>(field.size()) != e.n_states()) throw ExpressionError("lie derivative: dimension mismatch");
  Expression out(e.n_states());
  for (size_t i = 0; i < field.size(); ++i) {
    if (field[i].empty()) continue;
    out = out + partial(e, static_cast<int>(i)) * field[i];
  }
  return out;
}

Expression lie_f(const Expression& e, const ControlAffineSystem& sys) { return lie_derivative(e, sys.f); }

Expression lie_g(const Expression& e, const ControlAffineSystem& sys) { return lie_derivative(e, sys.g); }

LieChain relative_degree(const ControlAffineSystem& sys, double tol, int max_r) {
  sys.validate();
  if (max_r < 1) max_r = sys.n();
  LieChain chain;
  chain.c = sys.c;
  chain.lf_powers.push_back(sys.c);
  for (int k = 0; k < max_r; ++k) {
    const Expression& lfk = chain.lf_powers.back();
    chain.lg_mixed.push_back(lie_g(lfk, sys));
    chain.lf_powers.push_back(lie_f(lfk, sys));
    if (!is_zero(chain.lg_mixed.back(), tol)) {
      chain.relative_degree = k + 1;
      break;
    }
  }
  return chain;
}

NormalForm normal_form(const ControlAffineSystem& sys, const LieChain& chain) {
  const int n = sys.n();
  if (!chain.relative_degree) throw RelativeDegreeError("relative degree undefined");
  if (*chain.relative_degree < n) {
    throw RelativeDegreeError("internal dynamics present: relative degree " + std::to_string(*chain.relative_degree) +
                              " < " + std::to_string(n) + " states");
  }
  NormalForm nf;
  nf.coordinates.assign(chain.lf_powers.begin(), chain.lf_powers.begin() + n);
  nf.drift = chain.lf_powers.at(static_cast<size_t>(n));
  nf.gain = chain.lg_mixed.at(static_cast<size_t>(n - 1));
  for (int i = 1; i <= n; ++i) {
    nf.display.push_back("theta" + std::to_string(i) + " = " + format(nf.coordinates[static_cast<size_t>(i - 1)]));
  }
  for (int i = 1; i < n; ++i) {
    nf.display.push_back("d/dt theta" + std::to_string(i) + " = theta" + std::to_string(i + 1));
  }
  nf.display.push_back("d/dt theta" + std::to_string(n) + " = " + format(nf.drift) + " + (" + format(nf.gain) +
                       ")*u");
  nf.display.push_back("y = theta1");
  return nf;
}

namespace {

void check_blocks(const DictionarySet& ds, const Eigen::MatrixXd& Xi_tilde) {
  if (Xi_tilde.rows() != static_cast<Eigen::Index>(ds.theta_f_entries.size()) || Xi_tilde.cols() != ds.n_states) {
    throw std::invalid_argument("Xi_tilde does not match the dictionary");
  }
}

// C_k[p] = sum_{j,l} N[p][j][l] Xi(j,l)
std::vector<Expression> contract(const NProduct& N, const Eigen::MatrixXd& Xi, int n) {
  std::vector<Expression> out;
  for (const auto& per_p : N.entries) {
    Expression acc(n);
    for (size_t j = 0; j < per_p.size(); ++j) {
      for (size_t l = 0; l < per_p[j].size(); ++l) {
        const double w = Xi(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l));
        if (w != 0.0) acc = acc + w * per_p[j][l];
      }
    }
    out.push_back(std::move(acc));
  }
  return out;
}

NProduct next_product(const std::vector<Expression>& prev, const std::vector<Expression>& columns, int n) {
  NProduct N;
  for (const auto& cp : prev) {
    std::vector<std::vector<Expression>> per_p;
    std::vector<Expression> grads;
    for (int l = 0; l < n; ++l) grads.push_back(partial(cp, l));
    for (const auto& theta : columns) {
      std::vector<Expression> per_j;
      for (int l = 0; l < n; ++l) per_j.push_back(grads[static_cast<size_t>(l)] * theta);
      per_p.push_back(std::move(per_j));
    }
    N.entries.push_back(std::move(per_p));
  }
  return N;
}

Expression weighted_sum(const std::vector<Expression>& items, const Eigen::VectorXd& w, int n) {
  Expression out(n);
  for (size_t p = 0; p < items.size(); ++p) {
    if (w(static_cast<Eigen::Index>(p)) != 0.0) out = out + w(static_cast<Eigen::Index>(p)) * items[p];
  }
  return out;
}

}  // namespace

std::vector<NProduct> n_recursion(const DictionarySet& ds, const Eigen::MatrixXd& Xi_tilde, int order) {
  const int n = ds.n_states;
  if (order < 0 || order > n) {
    throw std::out_of_range("n_recursion: order " + std::to_string(order) + " outside [0, " + std::to_string(n) + "]");
  }
  check_blocks(ds, Xi_tilde);
  std::vector<NProduct> out;
  std::vector<Expression> current = ds.phi_entries;
  for (int k = 1; k <= order; ++k) {
    out.push_back(next_product(current, ds.theta_f_entries, n));
    current = contract(out.back(), Xi_tilde, n);
  }
  return out;
}

Expression lie_power_via_n(const DictionarySet& ds, const Eigen::VectorXd& zeta, const Eigen::MatrixXd& Xi_tilde,
                           int k) {
  const int n = ds.n_states;
  if (zeta.size() != static_cast<Eigen::Index>(ds.phi_entries.size())) {
    throw std::invalid_argument("zeta does not match the output dictionary");
  }
  if (k == 0) return weighted_sum(ds.phi_entries, zeta, n);
  const auto N = n_recursion(ds, Xi_tilde, k);
  return weighted_sum(contract(N.back(), Xi_tilde, n), zeta, n);
}

Expression lg_lie_power_via_n(const DictionarySet& ds, const Eigen::VectorXd& zeta, const Eigen::MatrixXd& Xi_tilde,
                              const Eigen::MatrixXd& Xi_hat, int k) {
  const int n = ds.n_states;
  if (k < 0 || k >= n) throw std::out_of_range("lg_lie_power_via_n: order out of range");
  std::vector<Expression> current = ds.phi_entries;
  if (k > 0) {
    const auto N = n_recursion(ds, Xi_tilde, k);
    current = contract(N.back(), Xi_tilde, n);
  }
  std::vector<Expression> stripped;
  for (const auto& e : ds.theta_g_entries) stripped.push_back(e.strip_input());
  const NProduct G = next_product(current, stripped, n);
  return weighted_sum(contract(G, Xi_hat, n), zeta, n);
}

}  // namespace sparsefl
