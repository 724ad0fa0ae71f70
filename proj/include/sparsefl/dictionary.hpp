#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sparsefl/dataset.hpp"
#include "sparsefl/expression.hpp"

namespace sparsefl {

/// Candidate library description.
struct LibrarySpec {
  int poly_order = 3;
  std::vector<int> trig_orders;
  bool include_constant = true;
  /// Products sin/cos(j x_a) * sin/cos(j x_b) over distinct states a < b.
  bool cross_trig = false;
  int output_state = 0;  // zero-based index k of the state the output depends on
  int output_poly_order = 3;

  void validate(int n_states) const;
};

/// Drift entries in library order: constant, monomials of total degree
/// 1..poly_order (graded, larger leading exponents first), then
/// sin(j x_i), cos(j x_i) for each j and i, then optional cross products.
std::vector<Expression> drift_library(const LibrarySpec& spec, int n_states);

/// Symbolic libraries and their evaluation on one dataset.
struct DictionarySet {
  LibrarySpec spec;
  int n_states = 0;
  std::vector<Expression> theta_f_entries;
  std::vector<Expression> theta_g_entries;  // theta_f entry * u
  std::vector<Expression> phi_entries;      // 1, x_k, x_k^2, ...
  Eigen::MatrixXd ThetaF;
  Eigen::MatrixXd ThetaG;
  Eigen::MatrixXd Phi;
  std::vector<std::string> warnings;

  Eigen::Index px() const { return ThetaF.cols(); }
  Eigen::Index pu() const { return ThetaG.cols(); }
  Eigen::Index py() const { return Phi.cols(); }
};

/// Symbolic entries only; no dataset needed.
DictionarySet build_entries(const LibrarySpec& spec, int n_states);

DictionarySet build_dictionaries(const LibrarySpec& spec, const Dataset& d);

/// Evaluates `entries` row-wise on X (input set to 0) into an m x p matrix.
Eigen::MatrixXd evaluate_entries(const std::vector<Expression>& entries, const Eigen::MatrixXd& X);

/// d phi_j / d x_k for each output entry.
std::vector<Expression> gradient_dictionary(const DictionarySet& ds);

/// Gradient dictionary evaluated on every sample (m x p_y).
Eigen::MatrixXd evaluate_L_matrix(const DictionarySet& ds, const Dataset& d);

}  // namespace sparsefl
