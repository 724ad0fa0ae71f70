#include "sparsefl/system.hpp"

namespace sparsefl {

void ControlAffineSystem::validate() const {
  const int n_states = n();
  if (n_states < 1) throw std::invalid_argument("system has no states");
  if (static_cast<int>(g.size()) != n_states) throw std::invalid_argument("f and g differ in length");
  for (int i = 0; i < n_states; ++i) {
    if (f[i].n_states() != n_states || g[i].n_states() != n_states) {
      throw std::invalid_argument("vector field component " + std::to_string(i + 1) + " has wrong dimension");
    }
    if (f[i].depends_on_input() || g[i].depends_on_input()) {
      throw std::invalid_argument("f and g must not contain the input (control-affine form)");
    }
  }
  if (c.n_states() != n_states) throw std::invalid_argument("output map has wrong dimension");
  if (c.depends_on_input()) throw std::invalid_argument("output map must not contain the input");
}

Eigen::VectorXd ControlAffineSystem::drift(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(n());
  for (int i = 0; i < n(); ++i) out(i) = evaluate(f[static_cast<size_t>(i)], x);
  return out;
}

Eigen::VectorXd ControlAffineSystem::input_gain(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(n());
  for (int i = 0; i < n(); ++i) out(i) = evaluate(g[static_cast<size_t>(i)], x);
  return out;
}

Eigen::VectorXd ControlAffineSystem::rhs(const Eigen::VectorXd& x, double u) const {
  return drift(x) + input_gain(x) * u;
}

double ControlAffineSystem::output(const Eigen::VectorXd& x) const { return evaluate(c, x); }

ControlAffineSystem vdp_system(double theta, double sigma, double mu) {
  const int n = 2;
  const auto x1 = Expression::variable(n, 0);
  const auto x2 = Expression::variable(n, 1);
  ControlAffineSystem sys;
  sys.f = {x2, (2.0 * theta * sigma) * x2 - (2.0 * theta * sigma * mu) * (x1 * x1 * x2) - (theta * theta) * x1};
  sys.g = {Expression(n), Expression::constant(n, 1.0)};
  sys.c = x1;
  return sys;
}

ControlAffineSystem chain_integrator(int n) {
  if (n < 1) throw std::invalid_argument("chain_integrator: n must be >= 1");
  ControlAffineSystem sys;
  for (int i = 0; i < n; ++i) {
    sys.f.push_back(i + 1 < n ? Expression::variable(n, i + 1) : Expression(n));
    sys.g.push_back(i + 1 < n ? Expression(n) : Expression::constant(n, 1.0));
  }
  sys.c = Expression::variable(n, 0);
  return sys;
}

}  // namespace sparsefl
