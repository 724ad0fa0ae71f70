#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sparsefl/dataset.hpp"
#include "sparsefl/expression.hpp"

namespace sparsefl {

/// xdot = f(x) + g(x) u,  y = c(x)
struct ControlAffineSystem {
  std::vector<Expression> f;
  std::vector<Expression> g;
  Expression c;

  int n() const { return static_cast<int>(f.size()); }

  /// Throws std::invalid_argument when f/g contain input powers or the
  /// dimensions disagree.
  void validate() const;

  Eigen::VectorXd drift(const Eigen::VectorXd& x) const;
  Eigen::VectorXd input_gain(const Eigen::VectorXd& x) const;
  Eigen::VectorXd rhs(const Eigen::VectorXd& x, double u) const;
  double output(const Eigen::VectorXd& x) const;
};

/// Forced Van der Pol oscillator in the form
///   x1' = x2
///   x2' = 2 theta sigma x2 - 2 theta sigma mu x1^2 x2 - theta^2 x1 + u
ControlAffineSystem vdp_system(double theta, double sigma, double mu);

/// n-state integrator chain x1' = x2, ..., xn' = u with output x1.
ControlAffineSystem chain_integrator(int n);

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, long step) : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

/// Excitation input u(t, x).
class InputSignal {
 public:
  enum class Kind { Zero, Constant, SineSum, Chirp, Feedback };
  using Law = std::function<double(double t, const Eigen::VectorXd& x)>;

  static InputSignal zero();
  static InputSignal constant(double value);
  /// sum_i a_i sin(w_i t + phi_i)
  static InputSignal sine_sum(std::vector<double> amplitudes, std::vector<double> frequencies,
                              std::vector<double> phases);
  /// a sin(2 pi (f0 t + (f1 - f0) t^2 / (2 T))), linear frequency sweep from f0 to f1 Hz over T
  static InputSignal chirp(double amplitude, double f0, double f1, double duration);
  static InputSignal feedback(Law law);

  Kind kind() const { return kind_; }
  double operator()(double t, const Eigen::VectorXd& x) const { return law_(t, x); }

 private:
  InputSignal(Kind kind, Law law) : kind_(kind), law_(std::move(law)) {}

  Kind kind_;
  Law law_;
};

/// Classical fixed-step RK4. Produces `samples` rows at t = i*dt. The input
/// is re-evaluated at every stage time and state; Xdot holds the exact
/// right-hand side at each sample and Y the output map.
Dataset integrate(const ControlAffineSystem& sys, const Eigen::VectorXd& x0, const InputSignal& input, double dt,
                  long samples);

}  // namespace sparsefl
