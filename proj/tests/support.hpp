#pragma once

#include <random>

#include "sparsefl/expression.hpp"
#include "sparsefl/system.hpp"

namespace testing {

using namespace sparsefl;

/// Random expression with total monomial degree <= max_degree and trig
/// frequencies <= max_freq.
inline Expression random_expression(std::mt19937_64& rng, int n, int max_degree = 4, int max_freq = 2,
                                    bool with_input = false) {
  std::uniform_int_distribution<int> n_terms(1, 4);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_int_distribution<int> var(0, n - 1);
  std::uniform_int_distribution<int> coin(0, 2);
  std::uniform_int_distribution<int> freq(1, max_freq);
  std::vector<Term> terms;
  const int count = n_terms(rng);
  for (int k = 0; k < count; ++k) {
    Term t;
    t.coefficient = coef(rng);
    t.exponents.assign(static_cast<size_t>(n), 0);
    std::uniform_int_distribution<int> deg(0, max_degree);
    const int d = deg(rng);
    for (int i = 0; i < d; ++i) ++t.exponents[static_cast<size_t>(var(rng))];
    if (coin(rng) == 0) {
      t.trig.push_back({coin(rng) == 0 ? TrigKind::Sin : TrigKind::Cos, freq(rng), var(rng)});
    }
    if (with_input && coin(rng) == 0) t.input_power = 1;
    terms.push_back(std::move(t));
  }
  return Expression(n, std::move(terms));
}

inline Eigen::VectorXd random_point(std::mt19937_64& rng, int n, double scale = 1.5) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = dist(rng);
  return x;
}

/// The default identification run: Van der Pol with unit parameters,
/// three-sine excitation, x0 = [2, 0].
inline Dataset vdp_dataset(long samples = 100, double dt = 0.01) {
  Eigen::VectorXd x0(2);
  x0 << 2.0, 0.0;
  return integrate(vdp_system(1.0, 1.0, 1.0), x0, InputSignal::sine_sum({1, 1, 1}, {2.3, 5.9, 11.7}, {0, 1, 2}), dt,
                   samples);
}

}  // namespace testing
