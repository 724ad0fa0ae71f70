#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sparsefl {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniformly sampled trajectory of a single-input single-output system.
/// Rows are samples; X and Xdot are m x n.
struct Dataset {
  Eigen::VectorXd times;
  Eigen::MatrixXd X;
  std::optional<Eigen::MatrixXd> Xdot;
  Eigen::VectorXd U;
  Eigen::VectorXd Y;

  Eigen::Index samples() const { return X.rows(); }
  Eigen::Index states() const { return X.cols(); }
  double dt() const { return times(1) - times(0); }

  /// Throws DataError if any invariant is broken (shape, finiteness,
  /// uniform strictly increasing time grid).
  void validate() const;
};

/// Extra named columns appended to a CSV (e.g. the reference signal of a
/// closed-loop run). Ignored by load_csv.
using ExtraColumns = std::vector<std::pair<std::string, Eigen::VectorXd>>;

Dataset load_csv(const std::string& path);
void save_csv(const Dataset& d, const std::string& path, const ExtraColumns& extra = {});

/// Second-order finite differences: central in the interior, one-sided at
/// both ends. A measured Xdot is kept unless `overwrite` is set.
Dataset estimate_derivatives(const Dataset& d, bool overwrite = false);

}  // namespace sparsefl
