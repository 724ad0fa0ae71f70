#include <random>

#include "catch2/catch_amalgamated.hpp"
#include "sparsefl/regression.hpp"
#include "support.hpp"

using namespace sparsefl;
using Catch::Approx;

namespace {

// Row indices in the default cubic two-state library.
constexpr int kOne = 0, kX1 = 1, kX2 = 2, kX1sqX2 = 7;

struct Fixture {
  Dataset d = testing::vdp_dataset();
  DictionarySet ds = build_dictionaries(LibrarySpec{}, d);
};

void require_vdp_model(const SparseModel& m, double lambda) {
  CHECK(m.Xi_tilde(kX2, 0) == Approx(1.0).margin(0.05));
  CHECK(m.Xi_tilde(kX1, 1) == Approx(-1.0).margin(0.05));
  CHECK(m.Xi_tilde(kX2, 1) == Approx(2.0).margin(0.05));
  CHECK(m.Xi_tilde(kX1sqX2, 1) == Approx(-2.0).margin(0.05));
  CHECK(m.Xi_hat(kOne, 1) == Approx(1.0).margin(0.05));
  CHECK(m.zeta(1) == 1.0);
  CHECK(m.active_count() == 6);
  auto small_or_zero = [&](const Eigen::MatrixXd& M) {
    for (Eigen::Index i = 0; i < M.size(); ++i) {
      const double v = M.data()[i];
      if (v != 0.0 && std::abs(v) <= lambda) return false;
    }
    return true;
  };
  CHECK(small_or_zero(m.Xi_tilde));
  CHECK(small_or_zero(m.Xi_hat));
  CHECK(small_or_zero(m.zeta));
}

Eigen::VectorXd normal_equations(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  return (A.transpose() * A).llt().solve(A.transpose() * b);
}

}  // namespace

TEST_CASE("threshold_pass") {
  Eigen::Vector3d v(0.001, 1.2, -0.04);
  auto r = threshold_pass(v, 0.05);
  CHECK(r.values == Eigen::Vector3d(0, 1.2, 0));
  CHECK(r.active == IndexList{1});
  CHECK_FALSE(r.emptied);
  CHECK(threshold_pass(v, 0.0).values == v);
  auto all = threshold_pass(v, 5.0);
  CHECK(all.values.isZero(0));
  CHECK(all.emptied);
}

TEST_CASE("null-space constrained least squares matches the KKT system") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd A(12, 5), C(2, 5);
    Eigen::VectorXd b(12);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < C.size(); ++i) C.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = g(rng);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(7, 7);
    K.topLeftCorner(5, 5) = A.transpose() * A;
    K.topRightCorner(5, 2) = C.transpose();
    K.bottomLeftCorner(2, 5) = C;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(7);
    rhs.head(5) = A.transpose() * b;
    const Eigen::VectorXd kkt = K.fullPivLu().solve(rhs).head(5);
    const Eigen::VectorXd x = constrained_least_squares(A, b, C);
    CHECK((x - kkt).norm() <= 1e-10 * (1 + kkt.norm()));
    CHECK((C * x).norm() <= 1e-10);
    const Eigen::VectorXd p = penalized_least_squares(A, b, C, 1e10);
    CHECK((p - kkt).norm() <= 1e-4 * (1 + kkt.norm()));
  }
}

TEST_CASE("null space basis") {
  Eigen::MatrixXd C(1, 3);
  C << 1, 1, 0;
  const Eigen::MatrixXd Z = null_space(C);
  CHECK(Z.cols() == 2);
  CHECK((C * Z).norm() <= 1e-12);
  CHECK((Z.transpose() * Z - Eigen::MatrixXd::Identity(2, 2)).norm() <= 1e-12);
  CHECK(null_space(Eigen::MatrixXd::Zero(2, 3)).cols() == 3);
}

TEST_CASE("stls keeps required groups alive") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(3, 3);
  Eigen::Vector3d b(0.01, 0.02, 1.0);
  StlsOptions opt;
  opt.lambda = 0.05;
  opt.required_groups = {{0, 1}};
  const auto r = stls(A, b, Eigen::MatrixXd(0, 3), opt);
  CHECK(r.forced_group);
  CHECK(r.coeffs(0) == 0.0);
  CHECK(r.coeffs(1) == Approx(0.02));
  CHECK(r.coeffs(2) == Approx(1.0));
}

TEST_CASE("stacked system layout") {
  Fixture f;
  const StackedSystem st = build_stacked(f.ds, f.d);
  CHECK(st.A_joint.rows() == 300);
  CHECK(st.A_joint.cols() == 44);  // 2 p_x + 2 p_u + p_y
  CHECK(st.A_joint.block(0, 20, 100, 24).isZero(0));
  CHECK(st.A_joint.block(100, 0, 100, 20).isZero(0));
  CHECK(st.A_joint.block(100, 40, 100, 4).isZero(0));
  CHECK(st.A_joint.block(200, 0, 100, 40).isZero(0));

  Eigen::MatrixXd Xt = Eigen::MatrixXd::Zero(10, 2), Xh = Eigen::MatrixXd::Zero(10, 2);
  Eigen::VectorXd zeta = Eigen::VectorXd::Zero(4);
  Xt(kX2, 0) = 1;
  Xt(kX1, 1) = -1;
  Xt(kX2, 1) = 2;
  Xt(kX1sqX2, 1) = -2;
  Xh(kOne, 1) = 1;
  zeta(1) = 1;
  const Eigen::VectorXd eta = st.pack(Xt, Xh, zeta);
  CHECK((st.A_joint * eta - st.Z_joint).cwiseAbs().maxCoeff() <= 1e-8);

  Eigen::MatrixXd Xt2, Xh2;
  Eigen::VectorXd z2;
  st.unpack(eta, Xt2, Xh2, z2);
  CHECK(Xt2 == Xt);
  CHECK(Xh2 == Xh);
  CHECK(z2 == zeta);

  Dataset raw = f.d;
  raw.Xdot.reset();
  CHECK_THROWS_AS(build_stacked(f.ds, raw), DataError);
}

TEST_CASE("constraint factors") {
  Fixture f;
  const ConstraintFactors cf = build_constraint_M(f.ds, f.d);
  Eigen::MatrixXd brute = Eigen::MatrixXd::Zero(4, 10);
  for (Eigen::Index i = 0; i < f.d.samples(); ++i) brute += cf.L.row(i).transpose() * cf.ThetaG.row(i);
  CHECK((cf.M - brute).cwiseAbs().maxCoeff() <= 1e-10 * (1 + brute.cwiseAbs().maxCoeff()));

  Eigen::VectorXd zeta = Eigen::VectorXd::Zero(4);
  zeta(1) = 1;
  Eigen::VectorXd xi(10);
  xi.setLinSpaced(10, -1, 1);
  const Eigen::VectorXd r = cf.residuals(zeta, xi);
  for (Eigen::Index i = 0; i < f.d.samples(); ++i) {
    CHECK(r(i) == Approx(cf.L.row(i).dot(zeta) * cf.ThetaG.row(i).dot(xi)));
  }
  CHECK(cf.aggregated(zeta, xi) == Approx(r.sum()));
}

TEST_CASE("constraint matrix small cases") {
  Dataset d;
  d.times = Eigen::Vector2d(0, 0.1);
  d.X = Eigen::Vector2d(2, 5);
  d.U = Eigen::Vector2d(3, 0);
  d.Y = d.X.col(0);
  LibrarySpec spec;
  spec.poly_order = 1;
  spec.output_poly_order = 1;
  const auto cf = build_constraint_M(build_dictionaries(spec, d), d);
  CHECK(cf.M.col(0) == Eigen::Vector2d(0, 3));

  Fixture f;
  f.d.U.setZero();
  const auto quiet = build_dictionaries(LibrarySpec{}, f.d);
  CHECK(build_constraint_M(quiet, f.d).M.isZero(0));
}

TEST_CASE("general constraint agrees with the relative-degree-two factors") {
  Fixture f;
  const ConstraintFactors cf = build_constraint_M(f.ds, f.d);
  const GeneralConstraint gc(f.ds, f.d, 2);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd Xt(10, 2), Xh(10, 2);
    Eigen::VectorXd zeta(4);
    for (Eigen::Index i = 0; i < Xt.size(); ++i) Xt.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < Xh.size(); ++i) Xh.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < 4; ++i) zeta(i) = g(rng);
    const Eigen::MatrixXd a = gc.residuals(zeta, Xt, Xh);
    const Eigen::VectorXd b = cf.residuals(zeta, Xh.col(0));
    CHECK((a.col(0) - b).cwiseAbs().maxCoeff() <= 1e-12 * (1 + b.cwiseAbs().maxCoeff()));
  }
  CHECK_THROWS_AS(build_general_constraint(f.ds, f.d, 3), std::invalid_argument);
}

TEST_CASE("general constraint on the triple integrator") {
  Eigen::Vector3d x0(0.5, -0.3, 0.2);
  const Dataset d = integrate(chain_integrator(3), x0, InputSignal::sine_sum({1, 1}, {1.7, 4.1}, {0, 1}), 0.01, 50);
  LibrarySpec spec;
  spec.poly_order = 1;
  const DictionarySet ds = build_dictionaries(spec, d);
  Eigen::MatrixXd Xt = Eigen::MatrixXd::Zero(4, 3), Xh = Eigen::MatrixXd::Zero(4, 3);
  Xt(2, 0) = 1;  // x1' = x2
  Xt(3, 1) = 1;  // x2' = x3
  Xh(0, 2) = 1;  // x3' = u
  Eigen::VectorXd zeta = Eigen::VectorXd::Zero(4);
  zeta(1) = 1;
  const GeneralConstraint gc(ds, d, 3);
  CHECK(gc.residuals(zeta, Xt, Xh).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("solve reproduces the case-study coefficients") {
  Fixture f;
  const SparseModel m = solve(f.ds, f.d, RegressionConfig{});
  require_vdp_model(m, 0.05);
  CHECK(m.diagnostics.max_constraint_residual <= 1e-6);
  CHECK(m.g[0].empty());
  CHECK(m.diagnostics.converged);
  CHECK_FALSE(m.diagnostics.infeasible);

  // reconstruction invariant
  for (int l = 0; l < 2; ++l) {
    Expression fl(2), gl(2);
    for (size_t j = 0; j < 10; ++j) {
      fl = fl + m.Xi_tilde(static_cast<Eigen::Index>(j), l) * f.ds.theta_f_entries[j];
      gl = gl + m.Xi_hat(static_cast<Eigen::Index>(j), l) * f.ds.theta_g_entries[j].strip_input();
    }
    CHECK(fl == m.f[static_cast<size_t>(l)]);
    CHECK(gl == m.g[static_cast<size_t>(l)]);
  }
}

TEST_CASE("solver variants agree on the case study") {
  Fixture f;
  RegressionConfig agg;
  agg.constraint_mode = ConstraintMode::Aggregated;
  require_vdp_model(solve(f.ds, f.d, agg), 0.05);

  RegressionConfig pen;
  pen.solver_mode = SolverMode::Penalty;
  require_vdp_model(solve(f.ds, f.d, pen), 0.05);

  RegressionConfig scaled;
  scaled.normalize_columns = true;
  require_vdp_model(solve(f.ds, f.d, scaled), 0.05);

  RegressionConfig none;
  none.constraint_mode = ConstraintMode::None;
  require_vdp_model(solve(f.ds, f.d, none), 0.05);
}

TEST_CASE("solve equals ordinary least squares without threshold or constraint") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  for (int seed = 0; seed < 20; ++seed) {
    Dataset d;
    d.times = Eigen::VectorXd::LinSpaced(20, 0.0, 0.19);
    d.X.resize(20, 1);
    d.Xdot = Eigen::MatrixXd(20, 1);
    d.U.resize(20);
    d.Y.resize(20);
    for (int i = 0; i < 20; ++i) {
      d.X(i, 0) = g(rng);
      (*d.Xdot)(i, 0) = g(rng);
      d.U(i) = g(rng);
      d.Y(i) = g(rng);
    }
    LibrarySpec spec;
    spec.poly_order = 2;
    spec.output_poly_order = 2;
    const DictionarySet ds = build_dictionaries(spec, d);
    RegressionConfig cfg;
    cfg.lambda = 0.0;
    cfg.constraint_mode = ConstraintMode::None;
    cfg.normalize_zeta = false;
    const SparseModel m = solve(ds, d, cfg);

    Eigen::MatrixXd A(20, 6);
    A << ds.ThetaF, ds.ThetaG;
    const Eigen::VectorXd xi = normal_equations(A, d.Xdot->col(0));
    Eigen::VectorXd got(6);
    got << m.Xi_tilde.col(0), m.Xi_hat.col(0);
    CHECK((got - xi).norm() <= 1e-8 * xi.norm());
    const Eigen::VectorXd zeta = normal_equations(ds.Phi, d.Y);
    CHECK((m.zeta - zeta).norm() <= 1e-8 * zeta.norm());
  }
}

TEST_CASE("property: one more sweep leaves the model unchanged") {
  Fixture f;
  const RegressionConfig cfg;
  const SparseModel m = solve(f.ds, f.d, cfg);
  const SparseModel again = sweep(m, f.ds, f.d, cfg);
  CHECK((again.Xi_tilde - m.Xi_tilde).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((again.Xi_hat - m.Xi_hat).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((again.zeta - m.zeta).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(((again.Xi_tilde.array() != 0) == (m.Xi_tilde.array() != 0)).all());
}

TEST_CASE("property: larger lambda never grows the active set") {
  Fixture f;
  int previous = std::numeric_limits<int>::max();
  for (double lambda : {0.0, 0.01, 0.05, 0.1, 0.5, 1.5}) {
    RegressionConfig cfg;
    cfg.lambda = lambda;
    const int active = solve(f.ds, f.d, cfg).active_count();
    CHECK(active <= previous);
    previous = active;
  }
}

TEST_CASE("property: recovers the support of random polynomial systems") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> mag(0.5, 2.0), start(-1.0, 1.0);
  std::uniform_int_distribution<int> pick(1, 9), sign(0, 1);
  const auto basis = build_entries(LibrarySpec{}, 2).theta_f_entries;
  int recovered = 0, attempts = 0;
  while (recovered < 10 && attempts < 200) {
    ++attempts;
    Eigen::MatrixXd Xt = Eigen::MatrixXd::Zero(10, 2), Xh = Eigen::MatrixXd::Zero(10, 2);
    for (int l = 0; l < 2; ++l) {
      for (int k = 0; k < 2; ++k) Xt(pick(rng), l) = (sign(rng) ? 1 : -1) * mag(rng);
    }
    Xh(0, 1) = mag(rng);
    ControlAffineSystem sys;
    for (int l = 0; l < 2; ++l) {
      Expression fl(2);
      for (int j = 0; j < 10; ++j) fl = fl + Xt(j, l) * basis[static_cast<size_t>(j)];
      sys.f.push_back(fl);
    }
    sys.g = {Expression(2), Expression::constant(2, Xh(0, 1))};
    sys.c = Expression::variable(2, 0);
    Eigen::Vector2d x0(start(rng), start(rng));
    Dataset d;
    try {
      d = integrate(sys, x0, InputSignal::sine_sum({1, 1, 1}, {2.3, 5.9, 11.7}, {0, 1, 2}), 0.01, 200);
    } catch (const DivergenceError&) {
      continue;
    }
    if (d.X.cwiseAbs().maxCoeff() > 10.0 || d.X.cwiseAbs().colwise().maxCoeff().minCoeff() < 0.2) continue;
    const DictionarySet ds = build_dictionaries(LibrarySpec{}, d);
    const SparseModel m = solve(ds, d, RegressionConfig{});
    CHECK(((m.Xi_tilde.array() != 0) == (Xt.array() != 0)).all());
    CHECK(((m.Xi_hat.array() != 0) == (Xh.array() != 0)).all());
    CHECK((m.Xi_tilde - Xt).cwiseAbs().maxCoeff() <= 1e-6);
    ++recovered;
  }
  CHECK(recovered == 10);
}

TEST_CASE("over-thresholding is reported as infeasible") {
  Fixture f;
  RegressionConfig cfg;
  cfg.lambda = 10.0;
  const SparseModel m = solve(f.ds, f.d, cfg);
  CHECK(m.diagnostics.infeasible);
  REQUIRE_FALSE(m.diagnostics.warnings.empty());
  CHECK_THAT(m.diagnostics.warnings.back(), Catch::Matchers::ContainsSubstring("lower lambda"));
  CHECK_FALSE(m.Xi_hat.isZero(0));
  CHECK_FALSE(m.zeta.isZero(0));
}

TEST_CASE("regression config validation") {
  RegressionConfig cfg;
  cfg.lambda = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = RegressionConfig{};
  cfg.relative_degree = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = RegressionConfig{};
  cfg.relative_degree = 3;
  Fixture f;
  CHECK_THROWS_AS(solve(f.ds, f.d, cfg), std::invalid_argument);
}
