#include "sparsefl/regression.hpp"

#include <cmath>
#include <sstream>

#include "sparsefl/lie.hpp"

namespace sparsefl {

void RegressionConfig::validate() const {
  if (!(lambda >= 0.0)) throw std::invalid_argument("regression: lambda must be >= 0");
  if (!(constraint_tol > 0.0) || !(coef_tol > 0.0)) throw std::invalid_argument("regression: tolerances must be > 0");
  if (max_outer_iters < 1 || max_alt_iters < 1) throw std::invalid_argument("regression: iteration limits must be >= 1");
  if (relative_degree < 1) throw std::invalid_argument("regression: relative_degree must be >= 1");
  if (!(penalty_weight > 0.0)) throw std::invalid_argument("regression: penalty_weight must be > 0");
}

int SparseModel::active_count() const {
  return static_cast<int>((Xi_tilde.array() != 0.0).count() + (Xi_hat.array() != 0.0).count() +
                          (zeta.array() != 0.0).count());
}

// ---------------------------------------------------------------------------
// stacked system

Eigen::VectorXd StackedSystem::pack(const Eigen::MatrixXd& Xi_tilde, const Eigen::MatrixXd& Xi_hat,
                                    const Eigen::VectorXd& zeta) const {
  Eigen::VectorXd eta(zeta_offset() + py);
  for (Eigen::Index l = 0; l < n; ++l) {
    eta.segment(xi_tilde_offset(l), px) = Xi_tilde.col(l);
    eta.segment(xi_hat_offset(l), pu) = Xi_hat.col(l);
  }
  eta.tail(py) = zeta;
  return eta;
}

void StackedSystem::unpack(const Eigen::VectorXd& eta, Eigen::MatrixXd& Xi_tilde, Eigen::MatrixXd& Xi_hat,
                           Eigen::VectorXd& zeta) const {
  Xi_tilde.resize(px, n);
  Xi_hat.resize(pu, n);
  for (Eigen::Index l = 0; l < n; ++l) {
    Xi_tilde.col(l) = eta.segment(xi_tilde_offset(l), px);
    Xi_hat.col(l) = eta.segment(xi_hat_offset(l), pu);
  }
  zeta = eta.tail(py);
}

StackedSystem build_stacked(const DictionarySet& ds, const Dataset& d) {
  if (!d.Xdot) throw DataError("build_stacked: dataset has no derivative matrix (estimate derivatives first)");
  if (ds.ThetaF.rows() != d.samples()) throw std::invalid_argument("build_stacked: dictionaries not evaluated on d");
  StackedSystem st;
  st.n = d.states();
  st.m = d.samples();
  st.px = ds.px();
  st.pu = ds.pu();
  st.py = ds.py();
  st.A_joint = Eigen::MatrixXd::Zero((st.n + 1) * st.m, st.zeta_offset() + st.py);
  st.Z_joint.resize((st.n + 1) * st.m);
  for (Eigen::Index l = 0; l < st.n; ++l) {
    st.A_joint.block(l * st.m, st.xi_tilde_offset(l), st.m, st.px) = ds.ThetaF;
    st.A_joint.block(l * st.m, st.xi_hat_offset(l), st.m, st.pu) = ds.ThetaG;
    st.Z_joint.segment(l * st.m, st.m) = d.Xdot->col(l);
  }
  st.A_joint.block(st.n * st.m, st.zeta_offset(), st.m, st.py) = ds.Phi;
  st.Z_joint.tail(st.m) = d.Y;
  return st;
}

// ---------------------------------------------------------------------------
// relative degree two constraint

ConstraintFactors build_constraint_M(const DictionarySet& ds, const Dataset& d) {
  ConstraintFactors cf;
  cf.L = evaluate_L_matrix(ds, d);
  cf.ThetaG = ds.ThetaG;
  cf.M = cf.L.transpose() * cf.ThetaG;
  return cf;
}

Eigen::VectorXd ConstraintFactors::residuals(const Eigen::VectorXd& zeta, const Eigen::VectorXd& xi_hat_k) const {
  return (L * zeta).cwiseProduct(ThetaG * xi_hat_k);
}

double ConstraintFactors::aggregated(const Eigen::VectorXd& zeta, const Eigen::VectorXd& xi_hat_k) const {
  return zeta.dot(M * xi_hat_k);
}

// ---------------------------------------------------------------------------
// general chain constraint

namespace {

std::vector<Expression> combine(const std::vector<Expression>& entries, const Eigen::MatrixXd& W, int n) {
  std::vector<Expression> out;
  for (Eigen::Index l = 0; l < W.cols(); ++l) {
    Expression acc(n);
    for (Eigen::Index j = 0; j < W.rows(); ++j) {
      if (W(j, l) != 0.0) acc = acc + W(j, l) * entries[static_cast<size_t>(j)];
    }
    out.push_back(std::move(acc));
  }
  return out;
}

std::vector<Expression> stripped_input_entries(const DictionarySet& ds) {
  std::vector<Expression> out;
  for (const auto& e : ds.theta_g_entries) out.push_back(e.strip_input());
  return out;
}

Expression output_map(const DictionarySet& ds, const Eigen::VectorXd& zeta) {
  Expression c(ds.n_states);
  for (size_t p = 0; p < ds.phi_entries.size(); ++p) {
    const double w = zeta(static_cast<Eigen::Index>(p));
    if (w != 0.0) c = c + w * ds.phi_entries[p];
  }
  return c;
}

// Gradients of L_f^j e at every sample: result[j] is m x n.
std::vector<Eigen::MatrixXd> chain_gradients(const Expression& e, const std::vector<Expression>& f,
                                             const Eigen::MatrixXd& X, int orders) {
  const int n = e.n_states();
  std::vector<Eigen::MatrixXd> out;
  Expression lfj = e;
  for (int j = 0; j < orders; ++j) {
    std::vector<Expression> grads;
    for (int l = 0; l < n; ++l) grads.push_back(partial(lfj, l));
    out.push_back(evaluate_entries(grads, X));
    if (j + 1 < orders) lfj = lie_derivative(lfj, f);
  }
  return out;
}

}  // namespace

GeneralConstraint::GeneralConstraint(const DictionarySet& ds, const Dataset& d, int relative_degree)
    : ds_(&ds), X_(d.X), ThetaG_(ds.ThetaG), r_(relative_degree) {
  if (r_ < 2) throw std::invalid_argument("general constraint needs relative degree >= 2");
  if (r_ > ds.n_states) {
    throw std::invalid_argument("relative degree " + std::to_string(r_) + " exceeds state dimension " +
                                std::to_string(ds.n_states));
  }
  if (ThetaG_.rows() != X_.rows()) throw std::invalid_argument("general constraint: dictionaries not evaluated on d");
}

Eigen::MatrixXd GeneralConstraint::residuals(const Eigen::VectorXd& zeta, const Eigen::MatrixXd& Xi_tilde,
                                             const Eigen::MatrixXd& Xi_hat) const {
  const int n = ds_->n_states;
  const auto f = combine(ds_->theta_f_entries, Xi_tilde, n);
  const auto grads = chain_gradients(output_map(*ds_, zeta), f, X_, orders());
  // data-weighted input channel: column l is Theta_g xi^_l
  const Eigen::MatrixXd G = ThetaG_ * Xi_hat;
  Eigen::MatrixXd out(X_.rows(), orders());
  for (int j = 0; j < orders(); ++j) out.col(j) = grads[static_cast<size_t>(j)].cwiseProduct(G).rowwise().sum();
  return out;
}

Eigen::MatrixXd GeneralConstraint::rows_for_dynamics(const StackedSystem& st, const Eigen::VectorXd& zeta,
                                                     const Eigen::MatrixXd& Xi_tilde) const {
  const int n = ds_->n_states;
  const auto f = combine(ds_->theta_f_entries, Xi_tilde, n);
  const auto grads = chain_gradients(output_map(*ds_, zeta), f, X_, orders());
  const Eigen::Index m = X_.rows();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m * orders(), st.dynamics_cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    for (int j = 0; j < orders(); ++j) {
      const Eigen::Index row = i * orders() + j;
      for (Eigen::Index l = 0; l < n; ++l) {
        C.block(row, st.xi_hat_offset(l), 1, st.pu) = grads[static_cast<size_t>(j)](i, l) * ThetaG_.row(i);
      }
    }
  }
  return C;
}

Eigen::MatrixXd GeneralConstraint::rows_for_zeta(const Eigen::MatrixXd& Xi_tilde, const Eigen::MatrixXd& Xi_hat) const {
  const int n = ds_->n_states;
  const auto f = combine(ds_->theta_f_entries, Xi_tilde, n);
  const Eigen::MatrixXd G = ThetaG_ * Xi_hat;
  const Eigen::Index m = X_.rows();
  const auto py = static_cast<Eigen::Index>(ds_->phi_entries.size());
  Eigen::MatrixXd D(m * orders(), py);
  for (Eigen::Index p = 0; p < py; ++p) {
    const auto grads = chain_gradients(ds_->phi_entries[static_cast<size_t>(p)], f, X_, orders());
    for (int j = 0; j < orders(); ++j) {
      const Eigen::VectorXd v = grads[static_cast<size_t>(j)].cwiseProduct(G).rowwise().sum();
      for (Eigen::Index i = 0; i < m; ++i) D(i * orders() + j, p) = v(i);
    }
  }
  return D;
}

GeneralConstraint build_general_constraint(const DictionarySet& ds, const Dataset& d, int relative_degree) {
  return GeneralConstraint(ds, d, relative_degree);
}

// ---------------------------------------------------------------------------
// model assembly

void reconstruct(const DictionarySet& ds, SparseModel& model) {
  const int n = ds.n_states;
  model.f = combine(ds.theta_f_entries, model.Xi_tilde, n);
  model.g = combine(stripped_input_entries(ds), model.Xi_hat, n);
  model.c = scale(output_map(ds, model.zeta), model.output_scale);
}

// ---------------------------------------------------------------------------
// solver

namespace {

Eigen::MatrixXd aggregate_rows(const Eigen::MatrixXd& rows, int orders) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(orders, rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out.row(i % orders) += rows.row(i);
  return out;
}

class JointSolver {
 public:
  JointSolver(const DictionarySet& ds, const Dataset& d, const RegressionConfig& cfg)
      : ds_(ds), cfg_(cfg), st_(build_stacked(ds, d)) {
    cfg.validate();
    k_ = ds.spec.output_state;
    if (cfg.constraint_mode != ConstraintMode::None) {
      if (cfg.relative_degree > st_.n) {
        throw std::invalid_argument("relative degree " + std::to_string(cfg.relative_degree) +
                                    " exceeds state dimension " + std::to_string(st_.n));
      }
      if (cfg.relative_degree >= 2) {
        factors_ = build_constraint_M(ds, d);
        if (cfg.relative_degree > 2) general_.emplace(ds, d, cfg.relative_degree);
      }
    }
    A_dyn_ = st_.A_joint.topLeftCorner(st_.dynamics_rows(), st_.dynamics_cols());
    b_dyn_ = st_.Z_joint.head(st_.dynamics_rows());
    A_out_ = ds.Phi;
    b_out_ = d.Y;
    for (Eigen::Index l = 0; l < st_.n; ++l) {
      for (Eigen::Index q = 0; q < st_.pu; ++q) hat_columns_.push_back(st_.xi_hat_offset(l) + q);
    }
    for (Eigen::Index p = 0; p < st_.py; ++p) zeta_columns_.push_back(p);
    diag_.warnings = ds.warnings;
  }

  bool constrained() const { return cfg_.constraint_mode != ConstraintMode::None && cfg_.relative_degree >= 2; }

  void initialize() {
    const Eigen::MatrixXd none(0, 0);
    step_output(none);
    step_dynamics(Eigen::MatrixXd(0, st_.dynamics_cols()));
  }

  // One alternation; returns the largest coefficient change.
  double alternate() {
    const Eigen::VectorXd old_dyn = eta_dyn_;
    const Eigen::VectorXd old_zeta = zeta_;
    step_dynamics(constraint_rows_dynamics());
    step_output(constraint_rows_zeta());
    double change = (eta_dyn_ - old_dyn).lpNorm<Eigen::Infinity>();
    change = std::max(change, (zeta_ - old_zeta).lpNorm<Eigen::Infinity>());
    return change;
  }

  void load(const SparseModel& model) {
    Eigen::VectorXd zeta = model.zeta * model.output_scale;
    const Eigen::VectorXd eta = st_.pack(model.Xi_tilde, model.Xi_hat, zeta);
    eta_dyn_ = eta.head(st_.dynamics_cols());
    zeta_ = zeta;
  }

  SparseModel run() {
    initialize();
    if (!constrained()) {
      diag_.converged = true;
    } else {
      for (diag_.alt_iterations = 1; diag_.alt_iterations <= cfg_.max_alt_iters; ++diag_.alt_iterations) {
        if (alternate() < cfg_.coef_tol) {
          diag_.converged = true;
          break;
        }
      }
      diag_.alt_iterations = std::min(diag_.alt_iterations, cfg_.max_alt_iters);
    }
    return finish(true);
  }

  SparseModel run_single_sweep(const SparseModel& from) {
    load(from);
    if (constrained()) {
      alternate();
    } else {
      step_output(Eigen::MatrixXd(0, 0));
      step_dynamics(Eigen::MatrixXd(0, st_.dynamics_cols()));
    }
    diag_.alt_iterations = 1;
    diag_.converged = true;
    return finish(false);
  }

 private:
  StlsOptions options(std::vector<IndexList> groups) const {
    StlsOptions o;
    o.lambda = cfg_.lambda;
    o.max_iters = cfg_.max_outer_iters;
    o.constraint_solve =
        cfg_.solver_mode == SolverMode::Penalty ? ConstraintSolve::Penalty : ConstraintSolve::NullSpace;
    o.penalty_weight = cfg_.penalty_weight;
    o.rank_tol = cfg_.rank_tol;
    o.normalize_columns = cfg_.normalize_columns;
    o.required_groups = std::move(groups);
    return o;
  }

  void step_dynamics(const Eigen::MatrixXd& C) {
    auto res = stls(A_dyn_, b_dyn_, C, options({hat_columns_}));
    eta_dyn_ = res.coeffs;
    forced_dyn_ = res.forced_group;
    stls_converged_ = stls_converged_ && res.converged;
  }

  void step_output(const Eigen::MatrixXd& D) {
    const Eigen::MatrixXd Dz = D.rows() ? D : Eigen::MatrixXd(0, st_.py);
    auto res = stls(A_out_, b_out_, Dz, options({zeta_columns_}));
    zeta_ = res.coeffs;
    forced_zeta_ = res.forced_group;
    stls_converged_ = stls_converged_ && res.converged;
  }

  void current_blocks(Eigen::MatrixXd& Xi_tilde, Eigen::MatrixXd& Xi_hat) const {
    Eigen::VectorXd eta(st_.zeta_offset() + st_.py);
    eta << eta_dyn_, zeta_;
    Eigen::VectorXd z;
    st_.unpack(eta, Xi_tilde, Xi_hat, z);
  }

  Eigen::MatrixXd constraint_rows_dynamics() const {
    Eigen::MatrixXd C;
    int orders = 1;
    if (general_) {
      Eigen::MatrixXd Xt, Xh;
      current_blocks(Xt, Xh);
      C = general_->rows_for_dynamics(st_, zeta_, Xt);
      orders = general_->orders();
    } else {
      C = Eigen::MatrixXd::Zero(st_.m, st_.dynamics_cols());
      const Eigen::VectorXd slope = factors_->L * zeta_;
      C.middleCols(st_.xi_hat_offset(k_), st_.pu) = slope.asDiagonal() * factors_->ThetaG;
    }
    return cfg_.constraint_mode == ConstraintMode::Aggregated ? aggregate_rows(C, orders) : C;
  }

  Eigen::MatrixXd constraint_rows_zeta() const {
    Eigen::MatrixXd Xt, Xh;
    current_blocks(Xt, Xh);
    Eigen::MatrixXd D;
    int orders = 1;
    if (general_) {
      D = general_->rows_for_zeta(Xt, Xh);
      orders = general_->orders();
    } else {
      const Eigen::VectorXd gk = factors_->ThetaG * Xh.col(k_);
      D = gk.asDiagonal() * factors_->L;
    }
    return cfg_.constraint_mode == ConstraintMode::Aggregated ? aggregate_rows(D, orders) : D;
  }

  SparseModel finish(bool enforce) {
    SparseModel model;
    current_blocks(model.Xi_tilde, model.Xi_hat);
    model.zeta = zeta_;
    if (cfg_.normalize_zeta && zeta_.size() > 0) {
      Eigen::Index imax = 0;
      zeta_.cwiseAbs().maxCoeff(&imax);
      if (zeta_(imax) != 0.0) {
        model.output_scale = zeta_(imax);
        model.zeta = zeta_ / zeta_(imax);
      }
    }
    reconstruct(ds_, model);

    auto& dg = diag_;
    dg.state_residuals.resize(st_.n);
    for (Eigen::Index l = 0; l < st_.n; ++l) {
      const Eigen::VectorXd r = ds_.ThetaF * model.Xi_tilde.col(l) + ds_.ThetaG * model.Xi_hat.col(l) -
                                st_.Z_joint.segment(l * st_.m, st_.m);
      dg.state_residuals(l) = r.norm();
    }
    dg.output_residual = (ds_.Phi * model.zeta * model.output_scale - b_out_).norm();
    dg.active_xi_tilde.clear();
    dg.active_xi_hat.clear();
    for (Eigen::Index l = 0; l < st_.n; ++l) {
      dg.active_xi_tilde.push_back(static_cast<int>((model.Xi_tilde.col(l).array() != 0.0).count()));
      dg.active_xi_hat.push_back(static_cast<int>((model.Xi_hat.col(l).array() != 0.0).count()));
    }
    dg.active_zeta = static_cast<int>((model.zeta.array() != 0.0).count());

    if (cfg_.relative_degree >= 2 && factors_) {
      if (general_) {
        const Eigen::MatrixXd res = general_->residuals(model.zeta, model.Xi_tilde, model.Xi_hat);
        dg.max_constraint_residual = res.cwiseAbs().maxCoeff();
        dg.aggregated_constraint_residual = res.colwise().sum().cwiseAbs().maxCoeff();
      } else {
        const Eigen::VectorXd res = factors_->residuals(model.zeta, model.Xi_hat.col(k_));
        dg.max_constraint_residual = res.cwiseAbs().maxCoeff();
        dg.aggregated_constraint_residual = std::abs(factors_->aggregated(model.zeta, model.Xi_hat.col(k_)));
      }
    }

    const bool hat_empty = model.Xi_hat.isZero(0);
    const bool zeta_empty = model.zeta.isZero(0);
    if (forced_dyn_ || forced_zeta_ || hat_empty || zeta_empty) {
      dg.infeasible = true;
      std::string what = "infeasible active set:";
      if (forced_zeta_ || zeta_empty) what += " output coefficients thresholded away;";
      if (forced_dyn_ || hat_empty) what += " input-channel coefficients thresholded away;";
      std::ostringstream lam;
      lam << cfg_.lambda;
      what += " lower lambda (currently " + lam.str() + ")";
      dg.warnings.push_back(what);
    }
    if (!stls_converged_) dg.warnings.push_back("thresholding did not settle within max_outer_iters");
    model.diagnostics = dg;

    if (enforce && constrained()) {
      if (!dg.converged) {
        throw RegressionError("alternating regression did not converge within " +
                                  std::to_string(cfg_.max_alt_iters) + " iterations",
                              dg);
      }
      const double measured = cfg_.constraint_mode == ConstraintMode::Aggregated ? dg.aggregated_constraint_residual
                                                                                  : dg.max_constraint_residual;
      if (!dg.infeasible && measured > cfg_.constraint_tol) {
        throw RegressionError("constraint residual " + std::to_string(measured) + " exceeds tolerance " +
                                  std::to_string(cfg_.constraint_tol),
                              dg);
      }
    }
    return model;
  }

  const DictionarySet& ds_;
  RegressionConfig cfg_;
  StackedSystem st_;
  Eigen::Index k_ = 0;
  std::optional<ConstraintFactors> factors_;
  std::optional<GeneralConstraint> general_;
  Eigen::MatrixXd A_dyn_;
  Eigen::VectorXd b_dyn_;
  Eigen::MatrixXd A_out_;
  Eigen::VectorXd b_out_;
  IndexList hat_columns_;
  IndexList zeta_columns_;
  Eigen::VectorXd eta_dyn_;
  Eigen::VectorXd zeta_;
  bool forced_dyn_ = false;
  bool forced_zeta_ = false;
  bool stls_converged_ = true;
  RegressionDiagnostics diag_;
};

}  // namespace

SparseModel solve(const DictionarySet& ds, const Dataset& d, const RegressionConfig& cfg) {
  return JointSolver(ds, d, cfg).run();
}

SparseModel sweep(const SparseModel& model, const DictionarySet& ds, const Dataset& d, const RegressionConfig& cfg) {
  return JointSolver(ds, d, cfg).run_single_sweep(model);
}

}  // namespace sparsefl
