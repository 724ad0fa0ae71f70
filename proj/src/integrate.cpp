#include <cmath>
#include <numbers>

#include "sparsefl/system.hpp"

namespace sparsefl {

InputSignal InputSignal::zero() {
  return InputSignal(Kind::Zero, [](double, const Eigen::VectorXd&) { return 0.0; });
}

InputSignal InputSignal::constant(double value) {
  return InputSignal(Kind::Constant, [value](double, const Eigen::VectorXd&) { return value; });
}

InputSignal InputSignal::sine_sum(std::vector<double> amplitudes, std::vector<double> frequencies,
                                  std::vector<double> phases) {
  if (amplitudes.size() != frequencies.size() || amplitudes.size() != phases.size()) {
    throw std::invalid_argument("sine_sum: amplitudes, frequencies and phases differ in length");
  }
  return InputSignal(Kind::SineSum, [a = std::move(amplitudes), w = std::move(frequencies),
                                     p = std::move(phases)](double t, const Eigen::VectorXd&) {
    double u = 0.0;
    for (size_t i = 0; i < a.size(); ++i) u += a[i] * std::sin(w[i] * t + p[i]);
    return u;
  });
}

InputSignal InputSignal::chirp(double amplitude, double f0, double f1, double duration) {
  if (!(duration > 0.0)) throw std::invalid_argument("chirp: duration must be positive");
  return InputSignal(Kind::Chirp, [=](double t, const Eigen::VectorXd&) {
    const double phase = 2.0 * std::numbers::pi * (f0 * t + 0.5 * (f1 - f0) * t * t / duration);
    return amplitude * std::sin(phase);
  });
}

InputSignal InputSignal::feedback(Law law) { return InputSignal(Kind::Feedback, std::move(law)); }

Dataset integrate(const ControlAffineSystem& sys, const Eigen::VectorXd& x0, const InputSignal& input, double dt,
                  long samples) {
  sys.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("integrate: dt must be positive");
  if (samples < 2) throw std::invalid_argument("integrate: need at least 2 samples");
  const int n = sys.n();
  if (x0.size() != n) throw std::invalid_argument("integrate: x0 has wrong dimension");

  Dataset d;
  d.times.resize(samples);
  d.X.resize(samples, n);
  d.Xdot = Eigen::MatrixXd(samples, n);
  d.U.resize(samples);
  d.Y.resize(samples);

  auto check = [](const Eigen::VectorXd& v, double u, long step) {
    if (!v.allFinite() || !std::isfinite(u)) {
      throw DivergenceError("divergence: non-finite state at step " + std::to_string(step), step);
    }
  };
  auto field = [&](double t, const Eigen::VectorXd& x, long step) {
    check(x, 0.0, step);
    const double u = input(t, x);
    check(x, u, step);
    return sys.rhs(x, u);
  };

  Eigen::VectorXd x = x0;
  for (long i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) * dt;
    check(x, 0.0, i);
    const double u = input(t, x);
    check(x, u, i);
    d.times(i) = t;
    d.X.row(i) = x.transpose();
    d.U(i) = u;
    d.Xdot->row(i) = sys.rhs(x, u).transpose();
    d.Y(i) = sys.output(x);
    if (i + 1 == samples) break;

    const Eigen::VectorXd k1 = field(t, x, i);
    const Eigen::VectorXd k2 = field(t + 0.5 * dt, x + 0.5 * dt * k1, i);
    const Eigen::VectorXd k3 = field(t + 0.5 * dt, x + 0.5 * dt * k2, i);
    const Eigen::VectorXd k4 = field(t + dt, x + dt * k3, i);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    check(x, 0.0, i + 1);
  }
  return d;
}

}  // namespace sparsefl
