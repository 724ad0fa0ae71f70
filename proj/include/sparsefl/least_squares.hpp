#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace sparsefl {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using IndexList = std::vector<Eigen::Index>;

/// Minimum-norm least squares solution of A x ~ b.
template <typename DA, typename DB>
VectorX<typename DA::Scalar> least_squares(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& b) {
  using Scalar = typename DA::Scalar;
  if (A.cols() == 0) return VectorX<Scalar>(0);
  return Eigen::CompleteOrthogonalDecomposition<MatrixX<Scalar>>(A).solve(b);
}

/// Orthonormal basis of ker(C). Singular values at or below
/// rel_tol * sigma_max count as zero.
template <typename DC>
MatrixX<typename DC::Scalar> null_space(const Eigen::MatrixBase<DC>& C, double rel_tol = 1e-10) {
  using Scalar = typename DC::Scalar;
  const Eigen::Index p = C.cols();
  if (C.rows() == 0 || C.isZero(0)) return MatrixX<Scalar>::Identity(p, p);
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(C, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const Scalar cutoff = Scalar(rel_tol) * s(0);
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cutoff) ++rank;
  return svd.matrixV().rightCols(p - rank);
}

/// min |A x - b| subject to C x = 0, by eliminating onto ker(C).
template <typename DA, typename DB, typename DC>
VectorX<typename DA::Scalar> constrained_least_squares(const Eigen::MatrixBase<DA>& A,
                                                       const Eigen::MatrixBase<DB>& b,
                                                       const Eigen::MatrixBase<DC>& C, double rel_tol = 1e-10) {
  using Scalar = typename DA::Scalar;
  if (C.rows() == 0 || C.isZero(0)) return least_squares(A, b);
  const MatrixX<Scalar> Z = null_space(C, rel_tol);
  if (Z.cols() == 0) return VectorX<Scalar>::Zero(A.cols());
  const MatrixX<Scalar> AZ = A * Z;
  return Z * least_squares(AZ, b);
}

/// min |A x - b|^2 + rho |C x|^2
template <typename DA, typename DB, typename DC>
VectorX<typename DA::Scalar> penalized_least_squares(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& b,
                                                     const Eigen::MatrixBase<DC>& C, double rho) {
  using Scalar = typename DA::Scalar;
  if (C.rows() == 0) return least_squares(A, b);
  MatrixX<Scalar> stacked(A.rows() + C.rows(), A.cols());
  stacked << A, Scalar(std::sqrt(rho)) * C;
  VectorX<Scalar> rhs = VectorX<Scalar>::Zero(stacked.rows());
  rhs.head(A.rows()) = b;
  return least_squares(stacked, rhs);
}

template <typename Scalar>
struct ThresholdResult {
  VectorX<Scalar> values;
  IndexList active;
  /// every entry fell below the threshold
  bool emptied = false;
};

/// Zeroes entries with |value| < lambda and reports the surviving indices.
template <typename D>
ThresholdResult<typename D::Scalar> threshold_pass(const Eigen::MatrixBase<D>& coeffs, double lambda) {
  ThresholdResult<typename D::Scalar> out;
  out.values = coeffs;
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
    if (std::abs(coeffs(i)) < lambda) {
      out.values(i) = 0;
    } else {
      out.active.push_back(i);
    }
  }
  out.emptied = out.active.empty() && coeffs.size() > 0;
  return out;
}

enum class ConstraintSolve { NullSpace, Penalty };

struct StlsOptions {
  double lambda = 0.05;
  int max_iters = 25;
  ConstraintSolve constraint_solve = ConstraintSolve::NullSpace;
  double penalty_weight = 1e8;
  double rank_tol = 1e-10;
  /// Solve on unit-norm columns; thresholds still apply to the unscaled
  /// coefficients.
  bool normalize_columns = false;
  /// Column groups that may not be thresholded to empty; when a group
  /// would vanish its largest-magnitude coefficient is kept and flagged.
  std::vector<IndexList> required_groups;
};

template <typename Scalar>
struct StlsResult {
  VectorX<Scalar> coeffs;
  IndexList active;
  int iterations = 0;
  bool converged = false;
  bool forced_group = false;
};

/// Sequential thresholded least squares with optional homogeneous linear
/// constraint C x = 0, re-solved on the active columns after every pass.
template <typename DA, typename DB, typename DC>
StlsResult<typename DA::Scalar> stls(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& b,
                                     const Eigen::MatrixBase<DC>& C, const StlsOptions& opt) {
  using Scalar = typename DA::Scalar;
  const Eigen::Index p = A.cols();
  StlsResult<Scalar> res;
  res.coeffs = VectorX<Scalar>::Zero(p);

  IndexList active(static_cast<size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) active[static_cast<size_t>(i)] = i;

  auto solve_on = [&](const IndexList& cols) {
    const auto k = static_cast<Eigen::Index>(cols.size());
    MatrixX<Scalar> As(A.rows(), k);
    MatrixX<Scalar> Cs(C.rows(), k);
    VectorX<Scalar> scale = VectorX<Scalar>::Ones(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      As.col(j) = A.col(cols[static_cast<size_t>(j)]);
      if (C.rows()) Cs.col(j) = C.col(cols[static_cast<size_t>(j)]);
      if (opt.normalize_columns) {
        const Scalar norm = As.col(j).norm();
        if (norm > Scalar(0)) scale(j) = Scalar(1) / norm;
      }
    }
    if (opt.normalize_columns) {
      As = As * scale.asDiagonal();
      if (C.rows()) Cs = Cs * scale.asDiagonal();
    }
    VectorX<Scalar> xs = opt.constraint_solve == ConstraintSolve::NullSpace
                             ? constrained_least_squares(As, b, Cs, opt.rank_tol)
                             : penalized_least_squares(As, b, Cs, opt.penalty_weight);
    if (opt.normalize_columns) xs = xs.cwiseProduct(scale);
    VectorX<Scalar> full = VectorX<Scalar>::Zero(p);
    for (Eigen::Index j = 0; j < k; ++j) full(cols[static_cast<size_t>(j)]) = xs(j);
    return full;
  };

  VectorX<Scalar> x = solve_on(active);
  for (res.iterations = 1; res.iterations <= opt.max_iters; ++res.iterations) {
    auto th = threshold_pass(x, opt.lambda);
    IndexList next = th.active;
    bool forced = false;
    for (const auto& group : opt.required_groups) {
      const bool alive = std::any_of(group.begin(), group.end(), [&](Eigen::Index i) {
        return std::find(next.begin(), next.end(), i) != next.end();
      });
      if (alive || group.empty()) continue;
      Eigen::Index best = group.front();
      for (Eigen::Index i : group) {
        if (std::abs(x(i)) > std::abs(x(best))) best = i;
      }
      if (x(best) == Scalar(0)) continue;  // nothing to keep
      next.push_back(best);
      forced = true;
    }
    res.forced_group = forced;
    std::sort(next.begin(), next.end());
    if (next == active) {
      res.converged = true;
      break;
    }
    active = std::move(next);
    x = solve_on(active);
  }
  res.coeffs = VectorX<Scalar>::Zero(p);
  for (Eigen::Index i : active) res.coeffs(i) = x(i);
  res.active = active;
  return res;
}

}  // namespace sparsefl
