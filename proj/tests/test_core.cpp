#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "robust_ot/core.hpp"
#include "robust_ot/instances.hpp"

using namespace robust_ot;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// Independent long-double transliteration of the generalized KL sum.
long double kl_longdouble(const Vector& x, const Vector& y) {
  long double s = 0.0L;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    long double xi = x[i], yi = y[i];
    if (xi > 0.0L) s += xi * logl(xi / yi) - xi + yi;
    else s += yi;
  }
  return s;
}

}  // namespace

TEST_CASE("generalized KL: identity and closed forms") {
  CHECK(generalized_kl(vec({0.3, 0.7}), vec({0.3, 0.7})) == doctest::Approx(0.0));
  // KL([2] || [1]) = 2 log 2 - 2 + 1
  CHECK(generalized_kl(vec({2.0}), vec({1.0})) ==
        doctest::Approx(2.0 * std::log(2.0) - 1.0).epsilon(1e-14));
  // zero entries in x contribute y_i through the 0 log 0 = 0 convention
  CHECK(generalized_kl(vec({0.0, 1.0}), vec({0.5, 1.0})) ==
        doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("generalized KL: shape and positivity requirements") {
  CHECK_THROWS_AS(generalized_kl(vec({1.0}), vec({1.0, 2.0})), ShapeError);
  CHECK_THROWS_AS(generalized_kl(vec({1.0}), vec({0.0})),
                  NonPositiveWeightError);
  CHECK_THROWS_AS(generalized_kl(vec({1.0}), vec({-1.0})),
                  NonPositiveWeightError);
}

TEST_CASE("generalized KL: nonnegative, zero iff equal, matches long double") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(0.01, 3.0);
  for (int t = 0; t < 200; ++t) {
    Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 6);
    Vector x(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x[i] = dist(rng);
      y[i] = dist(rng);
    }
    double kl = generalized_kl(x, y);
    CHECK(kl >= 0.0);
    CHECK(kl == doctest::Approx(static_cast<double>(kl_longdouble(x, y)))
                    .epsilon(1e-12));
    CHECK(generalized_kl(x, x) == doctest::Approx(0.0));
    if ((x - y).cwiseAbs().maxCoeff() > 1e-3) CHECK(kl > 0.0);
  }
}

TEST_CASE("entropy: closed forms") {
  // single atom of mass 1: H = -1 (log 1 - 1) = 1
  Matrix single(1, 1);
  single << 1.0;
  CHECK(entropy(TransportPlan(single)) == doctest::Approx(1.0));
  // uniform 4x4 plan: H = 2 log 4 + 1
  Matrix uni = Matrix::Constant(4, 4, 1.0 / 16.0);
  CHECK(entropy(TransportPlan(uni)) ==
        doctest::Approx(2.0 * std::log(4.0) + 1.0).epsilon(1e-14));
  // zero entries follow 0 log 0 = 0
  Matrix z = Matrix::Zero(2, 2);
  z(0, 0) = 1.0;
  CHECK(entropy(TransportPlan(z)) == doctest::Approx(1.0));
}

TEST_CASE("entropy bounds 1 <= H <= 2 log n + 1 on 1000 random mass-1 plans") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 4);
    Matrix X(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) X(i, j) = dist(rng);
    }
    X /= X.sum();
    double h = entropy(TransportPlan(X));
    CHECK(h >= 1.0 - 1e-12);
    CHECK(h <= 2.0 * std::log(static_cast<double>(n)) + 1.0 + 1e-12);
  }
}

TEST_CASE("DiscreteMeasure: rejects zeros unless smoothing is requested") {
  CHECK_THROWS_AS(DiscreteMeasure(vec({0.5, 0.0, 0.5})),
                  NonPositiveWeightError);
  CHECK_THROWS_AS(DiscreteMeasure(vec({0.5, -0.1})), NonPositiveWeightError);
  DiscreteMeasure smoothed(vec({0.5, 0.0, 0.5}), /*smooth_zeros=*/true);
  CHECK(smoothed.weights().minCoeff() > 0.0);
  CHECK(smoothed.mass() == doctest::Approx(1.0));
  DiscreteMeasure plain(vec({0.25, 0.75}));
  CHECK(plain.log_weights()[1] == doctest::Approx(std::log(0.75)));
}

TEST_CASE("log_gibbs_marginals: zero-cost closed forms") {
  Matrix C0 = Matrix::Zero(2, 2);
  CostMatrix cost(C0);
  Vector zero = Vector::Zero(2);

  // u = v = 0, eta = 1: every entry of B is 1.
  LogMarginals lm = log_gibbs_marginals(zero, zero, cost, 1.0);
  CHECK(lm.log_row[0] == doctest::Approx(std::log(2.0)));
  CHECK(lm.log_row[1] == doctest::Approx(std::log(2.0)));
  CHECK(lm.log_col[0] == doctest::Approx(std::log(2.0)));
  CHECK(lm.log_mass == doctest::Approx(std::log(4.0)));

  // u = eta log 2 per entry at eta = 0.5 doubles every row sum.
  double eta = 0.5;
  Vector u = Vector::Constant(2, eta * std::log(2.0));
  LogMarginals lm2 = log_gibbs_marginals(u, zero, cost, eta);
  CHECK(lm2.log_row[0] == doctest::Approx(std::log(4.0)));
  CHECK(lm2.log_row[1] == doctest::Approx(std::log(4.0)));
}

TEST_CASE("log_gibbs_marginals: matches long-double dense evaluation") {
  std::mt19937_64 rng = rng_stream("test/core-marginals", 3, 0);
  CostMatrix cost = random_cost(3, 1.0, 50.0, rng);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector u(3), v(3);
  for (int i = 0; i < 3; ++i) {
    u[i] = dist(rng);
    v[i] = dist(rng);
  }
  double eta = 0.01;
  LogMarginals lm = log_gibbs_marginals(u, v, cost, eta);
  for (int i = 0; i < 3; ++i) {
    long double s = 0.0L;
    for (int j = 0; j < 3; ++j) {
      s += expl((static_cast<long double>(u[i]) + v[j] -
                 cost.entries()(i, j)) / eta);
    }
    CHECK(lm.log_row[i] ==
          doctest::Approx(static_cast<double>(logl(s))).epsilon(1e-10));
  }
}

TEST_CASE("log_gibbs_marginals: overflow-free at ||C||_inf/eta = 1e5") {
  std::mt19937_64 rng = rng_stream("test/core-overflow", 1, 0);
  CostMatrix cost = random_cost(4, 1.0, 50.0, rng);
  double eta = cost.max_entry() / 1e5;
  Vector zero = Vector::Zero(4);
  LogMarginals lm = log_gibbs_marginals(zero, zero, cost, eta);
  CHECK(lm.log_row.allFinite());
  CHECK(lm.log_col.allFinite());
  CHECK(std::isfinite(lm.log_mass));
  TransportPlan plan = materialize_plan(zero, zero, cost, eta, true);
  CHECK(plan.entries().allFinite());
  CHECK(plan.mass() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("log_gibbs_marginals: shift covariance in u") {
  std::mt19937_64 rng = rng_stream("test/core-shift", 5, 0);
  CostMatrix cost = random_cost(3, 1.0, 10.0, rng);
  Vector u = vec({0.3, -0.2, 0.1}), v = vec({0.0, 0.4, -0.1});
  double eta = 0.2, s = 0.7;
  LogMarginals base = log_gibbs_marginals(u, v, cost, eta);
  LogMarginals shifted =
      log_gibbs_marginals((u.array() + s).matrix(), v, cost, eta);
  for (int i = 0; i < 3; ++i) {
    CHECK(shifted.log_row[i] ==
          doctest::Approx(base.log_row[i] + s / eta).epsilon(1e-12));
  }
  CHECK(shifted.log_mass ==
        doctest::Approx(base.log_mass + s / eta).epsilon(1e-12));
}

TEST_CASE("materialize_plan: uniform case and normalization") {
  Matrix C0 = Matrix::Zero(2, 2);
  CostMatrix cost(C0);
  Vector zero = Vector::Zero(2);
  TransportPlan plan = materialize_plan(zero, zero, cost, 1.0, true);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      CHECK(plan.entries()(i, j) == doctest::Approx(0.25));
    }
  }
  CHECK(plan.mass() == doctest::Approx(1.0));
}

TEST_CASE("materialize_plan: softmax limit concentrates on the min cost") {
  Matrix C(2, 2);
  C << 0.0, 1.0, 1.0, 1.0;
  CostMatrix cost(C);
  Vector zero = Vector::Zero(2);
  TransportPlan plan = materialize_plan(zero, zero, cost, 1e-3, true);
  CHECK(plan.entries()(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(plan.entries()(1, 1) <= 1e-9);
}

TEST_CASE("materialize_plan: marginals agree with log marginals") {
  std::mt19937_64 rng = rng_stream("test/core-materialize", 9, 0);
  CostMatrix cost = random_cost(4, 1.0, 20.0, rng);
  Vector u(4), v(4);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (int i = 0; i < 4; ++i) {
    u[i] = dist(rng);
    v[i] = dist(rng);
  }
  double eta = 0.3;
  TransportPlan plan = materialize_plan(u, v, cost, eta, false);
  LogMarginals lm = log_gibbs_marginals(u, v, cost, eta);
  for (int i = 0; i < 4; ++i) {
    CHECK(plan.row_marginal()[i] ==
          doctest::Approx(std::exp(lm.log_row[i])).epsilon(1e-12));
    CHECK(plan.col_marginal()[i] ==
          doctest::Approx(std::exp(lm.log_col[i])).epsilon(1e-12));
  }
  CHECK(plan.mass() == doctest::Approx(std::exp(lm.log_mass)).epsilon(1e-12));
}

TEST_CASE("materialize_plan: raw path throws on guaranteed overflow") {
  Matrix C0 = Matrix::Zero(1, 1);
  CostMatrix cost(C0);
  Vector u = vec({800.0}), v = vec({0.0});
  CHECK_THROWS_AS(materialize_plan(u, v, cost, 1.0, false), ConvergenceError);
  // The normalized path shifts in log domain and stays finite.
  TransportPlan plan = materialize_plan(u, v, cost, 1.0, true);
  CHECK(plan.entries()(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("objectives: outer product of the marginals at zero cost") {
  Matrix C0 = Matrix::Zero(3, 3);
  CostMatrix cost(C0);
  std::mt19937_64 rng = rng_stream("test/core-objectives", 2, 0);
  DiscreteMeasure a(random_simplex(3, 0.1, 1.0, rng));
  DiscreteMeasure b(random_simplex(3, 0.1, 1.0, rng));
  TransportPlan outer(Matrix(a.weights() * b.weights().transpose()));
  CHECK(objective_rsot(outer, cost, a, 1.0) == doctest::Approx(0.0));
  CHECK(objective_rot(outer, cost, a, b, 1.0) == doctest::Approx(0.0));
  CHECK(objective_uot(outer, cost, a, b, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("objectives: n = 1 forced plan") {
  Matrix C(1, 1);
  C << 5.0;
  CostMatrix cost(C);
  DiscreteMeasure a(vec({1.0})), b(vec({1.0}));
  Matrix X(1, 1);
  X << 1.0;
  TransportPlan plan(X);
  // X 1 = a exactly, so f_rsot = <C, X> = 5.
  CHECK(objective_rsot(plan, cost, a, 1.0) == doctest::Approx(5.0));
}

TEST_CASE("objectives: random plans match a long-double transliteration") {
  std::mt19937_64 rng = rng_stream("test/core-objcheck", 4, 0);
  CostMatrix cost = random_cost(3, 1.0, 50.0, rng);
  DiscreteMeasure a(random_simplex(3, 0.1, 1.0, rng));
  DiscreteMeasure b(random_simplex(3, 0.1, 1.0, rng));
  std::uniform_real_distribution<double> dist(0.01, 1.0);
  double tau = 1.3;
  for (int t = 0; t < 50; ++t) {
    Matrix X(3, 3);
    for (int j = 0; j < 3; ++j) {
      for (int i = 0; i < 3; ++i) X(i, j) = dist(rng);
    }
    X /= X.sum();
    TransportPlan plan(X);
    long double lin = 0.0L;
    for (int j = 0; j < 3; ++j) {
      for (int i = 0; i < 3; ++i) lin += cost.entries()(i, j) * X(i, j);
    }
    Vector r = X.rowwise().sum(), c = X.colwise().sum().transpose();
    long double expect_rsot =
        lin + tau * kl_longdouble(r, a.weights());
    long double expect_rot = expect_rsot + tau * kl_longdouble(c, b.weights());
    CHECK(objective_rsot(plan, cost, a, tau) ==
          doctest::Approx(static_cast<double>(expect_rsot)).epsilon(1e-12));
    CHECK(objective_rot(plan, cost, a, b, tau) ==
          doctest::Approx(static_cast<double>(expect_rot)).epsilon(1e-12));
    CHECK(objective_uot(plan, cost, a, b, tau) ==
          doctest::Approx(objective_rot(plan, cost, a, b, tau)));
    // g = f - eta H
    double eta = 0.05;
    CHECK(entropic_objective_rsot(plan, cost, a, tau, eta) ==
          doctest::Approx(objective_rsot(plan, cost, a, tau) -
                          eta * entropy(plan))
              .epsilon(1e-12));
    CHECK(entropic_objective_rot(plan, cost, a, b, tau, eta) ==
          doctest::Approx(objective_rot(plan, cost, a, b, tau) -
                          eta * entropy(plan))
              .epsilon(1e-12));
  }
}
