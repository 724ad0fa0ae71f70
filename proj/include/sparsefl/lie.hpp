#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sparsefl/dictionary.hpp"
#include "sparsefl/expression.hpp"
#include "sparsefl/system.hpp"

namespace sparsefl {

class RelativeDegreeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// sum_i de/dx_i * f_i
Expression lie_f(const Expression& e, const ControlAffineSystem& sys);
/// sum_i de/dx_i * g_i
Expression lie_g(const Expression& e, const ControlAffineSystem& sys);

/// Lie derivative along an arbitrary vector field.
Expression lie_derivative(const Expression& e, const std::vector<Expression>& field);

struct LieChain {
  Expression c;
  std::vector<Expression> lf_powers;  // L_f^0 c .. L_f^r c
  std::vector<Expression> lg_mixed;   // L_g L_f^k c, k = 0..r-1
  std::optional<int> relative_degree;

  /// L_g L_f^{r-1} c
  const Expression& decoupling() const { return lg_mixed.at(static_cast<size_t>(*relative_degree - 1)); }
};

/// Smallest r with L_g L_f^{r-1} c not zero (all coefficients above tol).
/// max_r < 1 means "use the state dimension".
LieChain relative_degree(const ControlAffineSystem& sys, double tol = 1e-6, int max_r = 0);

struct NormalForm {
  std::vector<Expression> coordinates;  // L_f^{i-1} c, i = 1..n
  Expression drift;                     // L_f^n c
  Expression gain;                      // L_g L_f^{n-1} c
  std::vector<std::string> display;     // rendered transformed dynamics
};

/// Full-state linearizing coordinates; requires relative degree == n.
NormalForm normal_form(const ControlAffineSystem& sys, const LieChain& chain);

/// N_k[p][j][l] = d C_{k-1}[p] / dx_l * theta_f_j, where C_0 = phi and
/// C_k[p] = sum_{j,l} N_k[p][j][l] Xi_tilde(j, l).
struct NProduct {
  std::vector<std::vector<std::vector<Expression>>> entries;
};

/// N_1 .. N_order built over the symbolic dictionary entries.
std::vector<NProduct> n_recursion(const DictionarySet& ds, const Eigen::MatrixXd& Xi_tilde, int order);

/// zeta^T N_k Xi_tilde, i.e. L_f^k c through the dictionary recursion
/// (k = 0 gives zeta^T phi).
Expression lie_power_via_n(const DictionarySet& ds, const Eigen::VectorXd& zeta, const Eigen::MatrixXd& Xi_tilde,
                           int k);

/// zeta^T N'_k Xi_tilde . theta_g Xi_hat with the input factor stripped,
/// i.e. L_g L_f^k c through the dictionary recursion.
Expression lg_lie_power_via_n(const DictionarySet& ds, const Eigen::VectorXd& zeta, const Eigen::MatrixXd& Xi_tilde,
                              const Eigen::MatrixXd& Xi_hat, int k);

}  // namespace sparsefl
