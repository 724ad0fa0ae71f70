#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sparsefl/dataset.hpp"
#include "sparsefl/dictionary.hpp"
#include "sparsefl/least_squares.hpp"
#include "sparsefl/system.hpp"

namespace sparsefl {

enum class ConstraintMode { None, PerSample, Aggregated };
enum class SolverMode { AlternatingConstrained, Penalty };

struct RegressionConfig {
  double lambda = 0.05;
  /// thresholding passes per least-squares subproblem
  int max_outer_iters = 25;
  /// alternations between the dynamics block and the output block
  int max_alt_iters = 50;
  double constraint_tol = 1e-6;
  double coef_tol = 1e-10;
  ConstraintMode constraint_mode = ConstraintMode::PerSample;
  SolverMode solver_mode = SolverMode::AlternatingConstrained;
  double penalty_weight = 1e8;
  int relative_degree = 2;
  bool normalize_columns = false;
  bool normalize_zeta = true;
  double rank_tol = 1e-10;

  void validate() const;
};

struct RegressionDiagnostics {
  Eigen::VectorXd state_residuals;  // |Theta_f xi~_l + Theta_g xi^_l - xdot_l| per state
  double output_residual = 0.0;
  double max_constraint_residual = 0.0;  // over samples and chain orders
  double aggregated_constraint_residual = 0.0;
  std::vector<int> active_xi_tilde;
  std::vector<int> active_xi_hat;
  int active_zeta = 0;
  int alt_iterations = 0;
  bool converged = false;
  bool infeasible = false;
  std::vector<std::string> warnings;
};

/// Identified coefficients and the control-affine model they define.
struct SparseModel {
  Eigen::MatrixXd Xi_tilde;  // p_x x n
  Eigen::MatrixXd Xi_hat;    // p_u x n
  Eigen::VectorXd zeta;      // p_y
  /// y = output_scale * Phi zeta; 1 unless zeta was normalized
  double output_scale = 1.0;
  std::vector<Expression> f;
  std::vector<Expression> g;
  Expression c;
  RegressionDiagnostics diagnostics;

  ControlAffineSystem system() const { return {f, g, c}; }
  int active_count() const;
};

class RegressionError : public std::runtime_error {
 public:
  RegressionError(const std::string& what, RegressionDiagnostics diag)
      : std::runtime_error(what), diagnostics_(std::move(diag)) {}
  const RegressionDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  RegressionDiagnostics diagnostics_;
};

/// Block-diagonal joint system A_joint eta = Z_joint with
/// eta = [xi~_1, xi^_1, ..., xi~_n, xi^_n, zeta] and Z = [xdot_1; ...; xdot_n; y].
struct StackedSystem {
  Eigen::MatrixXd A_joint;
  Eigen::VectorXd Z_joint;
  Eigen::Index n = 0, m = 0, px = 0, pu = 0, py = 0;

  Eigen::Index state_block() const { return px + pu; }
  Eigen::Index xi_tilde_offset(Eigen::Index l) const { return l * state_block(); }
  Eigen::Index xi_hat_offset(Eigen::Index l) const { return l * state_block() + px; }
  Eigen::Index zeta_offset() const { return n * state_block(); }
  Eigen::Index dynamics_rows() const { return n * m; }
  Eigen::Index dynamics_cols() const { return n * state_block(); }

  Eigen::VectorXd pack(const Eigen::MatrixXd& Xi_tilde, const Eigen::MatrixXd& Xi_hat,
                       const Eigen::VectorXd& zeta) const;
  void unpack(const Eigen::VectorXd& eta, Eigen::MatrixXd& Xi_tilde, Eigen::MatrixXd& Xi_hat,
              Eigen::VectorXd& zeta) const;
};

StackedSystem build_stacked(const DictionarySet& ds, const Dataset& d);

/// Per-sample factors of the relative-degree-two constraint
/// zeta^T M xi^_k = 0, M = L^T Theta_g.
struct ConstraintFactors {
  Eigen::MatrixXd L;       // m x p_y, gradient dictionary per sample
  Eigen::MatrixXd ThetaG;  // m x p_u
  Eigen::MatrixXd M;       // p_y x p_u

  /// (zeta . L_i) (Theta_g,i . xi_hat_k) for every sample i
  Eigen::VectorXd residuals(const Eigen::VectorXd& zeta, const Eigen::VectorXd& xi_hat_k) const;
  double aggregated(const Eigen::VectorXd& zeta, const Eigen::VectorXd& xi_hat_k) const;
};

ConstraintFactors build_constraint_M(const DictionarySet& ds, const Dataset& d);

/// Chain constraints L_g L_f^j c = 0 for j = 0..r-2 on data samples, built
/// symbolically from the current coefficient blocks. The input channel is
/// weighted by the sampled input, matching the per-sample factors above.
class GeneralConstraint {
 public:
  GeneralConstraint(const DictionarySet& ds, const Dataset& d, int relative_degree);

  int relative_degree() const { return r_; }
  int orders() const { return r_ - 1; }

  /// m x (r-1) matrix of residuals.
  Eigen::MatrixXd residuals(const Eigen::VectorXd& zeta, const Eigen::MatrixXd& Xi_tilde,
                            const Eigen::MatrixXd& Xi_hat) const;
  /// Rows (sample-major, order-minor) linear in the stacked dynamics
  /// columns for fixed zeta and Xi_tilde.
  Eigen::MatrixXd rows_for_dynamics(const StackedSystem& st, const Eigen::VectorXd& zeta,
                                    const Eigen::MatrixXd& Xi_tilde) const;
  /// Rows linear in zeta for fixed Xi_tilde and Xi_hat.
  Eigen::MatrixXd rows_for_zeta(const Eigen::MatrixXd& Xi_tilde, const Eigen::MatrixXd& Xi_hat) const;

 private:
  const DictionarySet* ds_;
  Eigen::MatrixXd X_;
  Eigen::MatrixXd ThetaG_;
  int r_;
};

GeneralConstraint build_general_constraint(const DictionarySet& ds, const Dataset& d, int relative_degree);

/// f, g and c assembled from coefficient blocks and the symbolic entries.
void reconstruct(const DictionarySet& ds, SparseModel& model);

/// Joint sparse regression with the relative-degree constraint.
SparseModel solve(const DictionarySet& ds, const Dataset& d, const RegressionConfig& cfg);

/// One more alternation (dynamics block then output block) starting from
/// `model`, with the same thresholding.
SparseModel sweep(const SparseModel& model, const DictionarySet& ds, const Dataset& d, const RegressionConfig& cfg);

}  // namespace sparsefl
