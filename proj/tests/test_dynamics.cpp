#include <cmath>

#include "catch2/catch_amalgamated.hpp"
#include "support.hpp"

using namespace sparsefl;
using Catch::Approx;

namespace {

ControlAffineSystem scalar_decay() {
  return {{-Expression::variable(1, 0)}, {Expression(1)}, Expression::variable(1, 0)};
}

double decay_error(double dt) {
  const long samples = static_cast<long>(std::lround(1.0 / dt)) + 1;
  const Dataset d = integrate(scalar_decay(), Eigen::VectorXd::Ones(1), InputSignal::zero(), dt, samples);
  return std::abs(d.X(samples - 1, 0) - std::exp(-1.0));
}

double max_abs_state(const Dataset& d) { return d.X.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("vdp_system") {
  const auto sys = vdp_system(1, 1, 1);
  CHECK(format(sys.f[0]) == "x2");
  CHECK(format(sys.f[1]) == "-x1 + 2*x2 - 2*x1^2*x2");
  CHECK(format(vdp_system(1, 1, 0).f[1]) == "-x1 + 2*x2");
  for (const auto& s : {vdp_system(1, 1, 1), vdp_system(0.5, 2, 3)}) {
    CHECK(s.g[0].empty());
    CHECK(format(s.g[1]) == "1");
    CHECK(format(s.c) == "x1");
  }
  CHECK(format(vdp_system(2, 0.5, 1).f[1]) == "-4*x1 + 2*x2 - 2*x1^2*x2");
}

TEST_CASE("chain integrator") {
  const auto sys = chain_integrator(3);
  CHECK(format(sys.f[0]) == "x2");
  CHECK(format(sys.f[1]) == "x3");
  CHECK(sys.f[2].empty());
  CHECK(format(sys.g[2]) == "1");
}

TEST_CASE("RK4 on the scalar decay") {
  const Dataset d = integrate(scalar_decay(), Eigen::VectorXd::Ones(1), InputSignal::zero(), 0.01, 101);
  CHECK(d.times(100) == Approx(1.0));
  CHECK(std::abs(d.X(100, 0) - 0.367879441171) <= 1e-6);
  CHECK((*d.Xdot)(100, 0) == -d.X(100, 0));
  CHECK(d.Y(100) == d.X(100, 0));
}

TEST_CASE("property: RK4 global error is fourth order") {
  for (double dt : {0.1, 0.05, 0.02}) {
    const double ratio = decay_error(dt) / decay_error(dt / 2);
    CHECK(ratio >= 8.0);
    CHECK(ratio <= 32.0);
  }
}

TEST_CASE("unforced Van der Pol settles on a bounded limit cycle") {
  Eigen::Vector2d x0(2, 0);
  const auto sys = vdp_system(1, 1, 1);
  const Dataset coarse = integrate(sys, x0, InputSignal::zero(), 1e-3, 30001);
  const Dataset fine = integrate(sys, x0, InputSignal::zero(), 1e-4, 300001);
  CHECK(max_abs_state(fine) <= 5.0);
  CHECK(max_abs_state(coarse) <= 5.0);
  CHECK(std::abs(max_abs_state(coarse) - max_abs_state(fine)) <= 1e-3);
  // still oscillating at the end, not decayed to the origin
  CHECK(coarse.X.bottomRows(5000).cwiseAbs().maxCoeff() >= 1.0);
}

TEST_CASE("integrate argument errors") {
  Eigen::Vector2d x0(2, 0);
  const auto sys = vdp_system(1, 1, 1);
  CHECK_THROWS_AS(integrate(sys, x0, InputSignal::zero(), 0.01, 0), std::invalid_argument);
  CHECK_THROWS_AS(integrate(sys, x0, InputSignal::zero(), 0.01, 1), std::invalid_argument);
  CHECK_THROWS_AS(integrate(sys, x0, InputSignal::zero(), 0.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(integrate(sys, Eigen::VectorXd::Ones(3), InputSignal::zero(), 0.01, 10), std::invalid_argument);
}

TEST_CASE("divergence names the step") {
  const Expression x = Expression::variable(1, 0);
  const ControlAffineSystem blowup{{x * x * x}, {Expression(1)}, x};
  try {
    integrate(blowup, Eigen::VectorXd::Ones(1), InputSignal::zero(), 0.1, 100);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.step() > 0);
    CHECK_THAT(std::string(e.what()), Catch::Matchers::ContainsSubstring(std::to_string(e.step())));
  }
}

TEST_CASE("input signals") {
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  CHECK(InputSignal::zero()(1.0, x) == 0.0);
  CHECK(InputSignal::constant(2.5)(3.0, x) == 2.5);
  const auto s = InputSignal::sine_sum({1, 2}, {1, 3}, {0, 0.5});
  CHECK(s(0.7, x) == Approx(std::sin(0.7) + 2 * std::sin(2.1 + 0.5)));
  CHECK(InputSignal::chirp(1.0, 0.0, 1.0, 2.0)(0.0, x) == 0.0);
  CHECK_THROWS_AS(InputSignal::sine_sum({1}, {1, 2}, {0}), std::invalid_argument);
  const auto fb = InputSignal::feedback([](double, const Eigen::VectorXd& s) { return -s(0); });
  Eigen::VectorXd p(2);
  p << 3, 0;
  CHECK(fb(0.0, p) == -3.0);
  CHECK(fb.kind() == InputSignal::Kind::Feedback);
}

TEST_CASE("input is evaluated at stage times") {
  // x' = u with u = t integrates exactly under RK4: x(t) = t^2 / 2
  const ControlAffineSystem sys{{Expression(1)}, {Expression::constant(1, 1.0)}, Expression::variable(1, 0)};
  const auto ramp = InputSignal::feedback([](double t, const Eigen::VectorXd&) { return t; });
  const Dataset d = integrate(sys, Eigen::VectorXd::Zero(1), ramp, 0.1, 11);
  CHECK(d.X(10, 0) == Approx(0.5).epsilon(1e-12));
  CHECK(d.U(10) == Approx(1.0));
}
