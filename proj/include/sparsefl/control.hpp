#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sparsefl/dataset.hpp"
#include "sparsefl/expression.hpp"
#include "sparsefl/lie.hpp"
#include "sparsefl/system.hpp"

namespace sparsefl {

class ControlError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reference trajectory with exact derivatives of any order.
struct ReferenceSignal {
  enum class Kind { Zero, Constant, Sinusoid };
  Kind kind = Kind::Zero;
  double amplitude = 0.0;
  double frequency = 1.0;  // rad/s
  double phase = 0.0;

  static ReferenceSignal zero() { return {}; }
  static ReferenceSignal constant(double value) { return {Kind::Constant, value, 0.0, 0.0}; }
  /// amplitude * sin(frequency * t + phase)
  static ReferenceSignal sinusoid(double amplitude, double frequency, double phase = 0.0) {
    return {Kind::Sinusoid, amplitude, frequency, phase};
  }

  double operator()(double t) const { return derivative(0, t); }
  double derivative(int order, double t) const;
  /// [r(t), r'(t), ..., r^(order)(t)]
  Eigen::VectorXd derivatives(int order, double t) const;
};

/// Monic polynomial prod(s - p_i) = s^r + a_{r-1} s^{r-1} + ... + a_0,
/// returned as [a_0, ..., a_{r-1}]. Poles must be closed under conjugation.
/// A pole with non-negative real part adds a warning.
std::vector<double> gains_from_poles(const std::vector<std::complex<double>>& poles,
                                     std::vector<std::string>* warnings = nullptr);

/// "-2,-6" or "-2+1i,-2-1i"
std::vector<std::complex<double>> parse_poles(const std::string& text);
std::vector<double> parse_gains(const std::string& text);
std::string format_complex(std::complex<double> z);

/// Name of the k-th reference derivative slot: r, dr, ddr, ...
std::string reference_name(int order);

struct ControllerSpec {
  int r = 0;
  int n = 0;
  Expression alpha;                        // L_f^r c
  Expression beta;                         // L_g L_f^{r-1} c
  std::vector<Expression> output_chain;    // L_f^i c, i = 0..r-1
  std::vector<double> gains;               // a_0 .. a_{r-1}
  std::vector<std::complex<double>> poles;
  /// Over the extended variables (x1..xn, r, dr, ...):
  /// -alpha + sum_i a_i (r^(i) - L_f^i c) + r^(r)
  Expression numerator;
  /// numerator / beta when beta is constant; otherwise equal to numerator
  /// and the division happens at evaluation time.
  Expression law;
  bool beta_is_constant = true;
  std::vector<std::string> warnings;

  /// x1..xn followed by the reference slots.
  Symbols symbols() const;
  /// Law grouped as -alpha + a_0*(r - c) + ... with beta factored out.
  std::string display() const;
};

/// Requires a defined relative degree equal to the state dimension and a
/// non-zero decoupling term.
ControllerSpec synthesize(const LieChain& chain, int n_states, const std::vector<double>& gains);
ControllerSpec synthesize_from_poles(const LieChain& chain, int n_states,
                                     const std::vector<std::complex<double>>& poles);

/// Numeric control input at state x and time t.
double evaluate_law(const ControllerSpec& spec, const Eigen::VectorXd& x, const ReferenceSignal& ref, double t);

/// beta(x) magnitude below this aborts evaluation.
inline constexpr double kBetaGuard = 1e-9;

struct ClosedLoopResult {
  Dataset data;  // U holds the applied control input
  Eigen::VectorXd reference;
};

/// Integrates `plant` under the synthesized law.
ClosedLoopResult simulate_closed_loop(const ControlAffineSystem& plant, const ControllerSpec& spec,
                                      const ReferenceSignal& ref, const Eigen::VectorXd& x0, double dt, long samples);

}  // namespace sparsefl
