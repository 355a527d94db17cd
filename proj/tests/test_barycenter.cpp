#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "robust_ot/barycenter.hpp"
#include "robust_ot/core.hpp"
#include "robust_ot/errors.hpp"
#include "robust_ot/instances.hpp"
#include "robust_ot/oracle.hpp"
#include "robust_ot/rsot.hpp"

using namespace robust_ot;

namespace {

BarycenterProblem random_problem(int m, Eigen::Index n, std::mt19937_64& rng,
                                 double cost_lo = 1.0, double cost_hi = 8.0) {
  std::vector<CostMatrix> costs;
  std::vector<DiscreteMeasure> measures;
  for (int i = 0; i < m; ++i) {
    costs.push_back(random_cost(n, cost_lo, cost_hi, rng));
    measures.emplace_back(random_simplex(n, 0.1, 1.0, rng));
  }
  Vector w = random_simplex(m, 0.1, 1.0, rng);
  return BarycenterProblem(std::move(costs), std::move(measures),
                           std::move(w));
}

// Column marginals of the normalized kernels B(u_i, v_i)/||B_i||, one per
// problem term.
std::vector<Vector> normalized_col_marginals(const PotentialFamily& s,
                                             const BarycenterProblem& prob,
                                             double eta) {
  std::vector<Vector> out;
  for (int i = 0; i < prob.m(); ++i) {
    TransportPlan B =
        materialize_plan(s.u[i], s.v[i], prob.cost(i), eta, true);
    out.push_back(B.col_marginal());
  }
  return out;
}

}  // namespace

TEST_CASE("problem validation") {
  Vector w2(2);
  w2 << 0.5, 0.5;
  std::vector<CostMatrix> costs;
  costs.emplace_back(Matrix::Zero(3, 3));
  costs.emplace_back(Matrix::Zero(2, 2));
  std::vector<DiscreteMeasure> meas;
  meas.emplace_back(Vector::Constant(3, 1.0 / 3.0));
  meas.emplace_back(Vector::Constant(2, 0.5));
  CHECK_THROWS_AS(
      BarycenterProblem(std::move(costs), std::move(meas), w2), ShapeError);

  std::vector<CostMatrix> ok_costs(2, CostMatrix(Matrix::Zero(2, 2)));
  std::vector<DiscreteMeasure> ok_meas(2,
                                       DiscreteMeasure{Vector::Constant(2, 0.5)});
  Vector bad_w(2);
  bad_w << 0.6, 0.6;
  CHECK_THROWS_AS(BarycenterProblem(ok_costs, ok_meas, bad_w), ConfigError);
}

TEST_CASE("schedule arithmetic and the m=2 guarantee flag") {
  auto rng = rng_stream("rsbp-tests/schedule", 1, 0);
  for (int m : {2, 3}) {
    BarycenterProblem prob = random_problem(m, 10, rng);
    RsbpSchedule s = rsbp_schedule(prob, 1e-3, 1.0);
    double U = 2.0 + 2.0 * std::log(10.0);
    CHECK(s.U == doctest::Approx(U).epsilon(1e-14));
    CHECK(s.U == doctest::Approx(6.605170).epsilon(1e-6));
    CHECK(s.eta == doctest::Approx(1e-3 / U).epsilon(1e-14));
    CHECK(s.eta == doctest::Approx(1.51396e-4).epsilon(1e-5));
    CHECK(s.guarantee_valid == (m == 2));
    // Smallest even integer above the bound.
    double bound = 2.0 + 2.0 * (1.0 / s.eta + 1.0) *
                             std::log(4.0 * s.R_rsbp / (s.eta * s.eta));
    CHECK(s.k_required % 2 == 0);
    CHECK(static_cast<double>(s.k_required) >= bound);
    CHECK(static_cast<double>(s.k_required) - 2.0 < bound);
  }
}

TEST_CASE("identical symmetric pair keeps v at zero") {
  auto rng = rng_stream("rsbp-tests/symmetry", 2, 0);
  Eigen::Index n = 4;
  CostMatrix C = random_cost(n, 1.0, 5.0, rng);
  DiscreteMeasure p{random_simplex(n, 0.1, 1.0, rng)};
  Vector w(2);
  w << 0.5, 0.5;
  BarycenterProblem prob({C, C}, {p, p}, w);
  PotentialFamily s = PotentialFamily::zeros(2, n);
  for (std::int64_t k = 0; k < 10; ++k) {
    s = robust_ibp_step(s, k, prob, 0.3, 1.0);
    CHECK(s.v[0].cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(s.v[1].cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((s.u[0] - s.u[1]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("odd steps pin the weighted v-sum and the common marginal") {
  auto rng = rng_stream("rsbp-tests/invariants", 3, 0);
  for (int m : {2, 3, 10}) {
    Eigen::Index n = 4;
    BarycenterProblem prob = random_problem(m, n, rng);
    double eta = 0.2, tau = 1.0;
    PotentialFamily s = PotentialFamily::zeros(m, n);
    for (std::int64_t k = 0; k < 12; ++k) {
      s = robust_ibp_step(s, k, prob, eta, tau);
      if (k % 2 == 1) {
        Vector sum = Vector::Zero(n);
        for (int i = 0; i < m; ++i) sum += prob.weights()[i] * s.v[i];
        CHECK(sum.cwiseAbs().maxCoeff() <= 1e-12);

        std::vector<Vector> cols = normalized_col_marginals(s, prob, eta);
        for (int i = 1; i < m; ++i) {
          double rel = (cols[i] - cols[0]).cwiseAbs().maxCoeff() /
                       cols[0].maxCoeff();
          CHECK(rel <= 1e-10);
        }
      }
    }
  }
}

TEST_CASE("objective evaluators") {
  auto rng = rng_stream("rsbp-tests/objective", 4, 0);
  Eigen::Index n = 3;

  // Diagonal plans with zero-diagonal costs give objective zero.
  Matrix zero_diag = Matrix::Constant(n, n, 2.0);
  zero_diag.diagonal().setZero();
  DiscreteMeasure p{random_simplex(n, 0.1, 1.0, rng)};
  Vector w(2);
  w << 0.4, 0.6;
  BarycenterProblem prob({CostMatrix(zero_diag), CostMatrix(zero_diag)},
                         {p, p}, w);
  std::vector<TransportPlan> diag_plans(
      2, TransportPlan(Matrix(p.weights().asDiagonal())));
  CHECK(rsbp_objective(diag_plans, prob, 1.0) == doctest::Approx(0.0));

  // m = 1 with unit weight reduces to the semi-constrained objective.
  CostMatrix C = random_cost(n, 1.0, 5.0, rng);
  DiscreteMeasure a{random_simplex(n, 0.1, 1.0, rng)};
  BarycenterProblem single({C}, {a}, Vector::Constant(1, 1.0));
  Matrix X = random_simplex(n * n, 0.1, 1.0, rng).reshaped(n, n);
  std::vector<TransportPlan> one{TransportPlan(X)};
  CHECK(rsbp_objective(one, single, 0.7) ==
        doctest::Approx(objective_rsot(one[0], C, a, 0.7)).epsilon(1e-14));

  // Entropic variant is the weighted sum of per-term g values.
  double g = rsbp_entropic_objective(one, single, 0.7, 0.2);
  CHECK(g == doctest::Approx(objective_rsot(one[0], C, a, 0.7) -
                             0.2 * entropy(one[0]))
                 .epsilon(1e-12));
}

TEST_CASE("identical measures with zero-diagonal costs recover the input") {
  auto rng = rng_stream("rsbp-tests/zero", 5, 0);
  Eigen::Index n = 4;
  Matrix c = random_cost(n, 1.0, 4.0, rng).entries();
  c.diagonal().setZero();
  CostMatrix C(c);
  DiscreteMeasure p{random_simplex(n, 0.1, 1.0, rng)};
  Vector w(2);
  w << 0.5, 0.5;
  BarycenterProblem prob({C, C}, {p, p}, w);
  SolverConfig cfg;
  cfg.epsilon = 1e-3;
  RsbpSolution sol = solve_rsbp(prob, cfg);
  CHECK(rsbp_objective(sol.normalized_plans, prob, 1.0) <= 1e-3);
  CHECK((sol.barycenter.weights() - p.weights()).cwiseAbs().maxCoeff() <=
        2e-2);
  CHECK(sol.report.guarantee_valid);
  CHECK(sol.report.iterations_run % 2 == 0);
  CHECK(sol.marginal_spread <= 1e-10);
}

TEST_CASE("m=2 random instance lands within epsilon of the oracle") {
  auto rng = rng_stream("rsbp-tests/oracle", 6, 0);
  Eigen::Index n = 3;
  BarycenterProblem prob = random_problem(2, n, rng);
  SolverConfig cfg;
  cfg.epsilon = 1e-3;
  RsbpSolution sol = solve_rsbp(prob, cfg);
  OracleResult ref = oracle_rsbp(prob, 1.0, 1e-6, 6);
  double gap = rsbp_objective(sol.normalized_plans, prob, 1.0) - ref.objective;
  CHECK(gap <= 1e-3);
  CHECK(gap >= -1e-5);
}

TEST_CASE("raw and normalized plans obey the mass correspondence") {
  auto rng = rng_stream("rsbp-tests/lemma", 7, 0);
  Eigen::Index n = 3;
  BarycenterProblem prob = random_problem(2, n, rng);
  SolverConfig cfg;
  cfg.epsilon = 1e-3;
  RsbpSolution sol = solve_rsbp(prob, cfg);
  for (int i = 0; i < 2; ++i) {
    double x = sol.raw_plans[i].mass();
    Matrix scaled = sol.raw_plans[i].entries() / x;
    CHECK((scaled - sol.normalized_plans[i].entries()).cwiseAbs().maxCoeff() <=
          1e-12);
  }
  // The barycenter is the common column marginal of the normalized plans.
  CHECK((sol.barycenter.weights() - sol.normalized_plans[0].col_marginal())
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
}

TEST_CASE("m=3 runs to completion with the guarantee flagged off") {
  auto rng = rng_stream("rsbp-tests/m3", 8, 0);
  BarycenterProblem prob = random_problem(3, 3, rng, 0.1, 0.6);
  SolverConfig cfg;
  cfg.epsilon = 1e-2;
  RsbpSolution sol = solve_rsbp(prob, cfg);
  CHECK_FALSE(sol.report.guarantee_valid);
  CHECK(sol.marginal_spread <= 1e-10);
}

TEST_CASE("contraction diagnostics stay under the damping ratio") {
  auto rng = rng_stream("rsbp-tests/contraction", 9, 0);
  Eigen::Index n = 5;
  double tau = 0.1, eta = 0.01;
  std::vector<CostMatrix> costs;
  std::vector<DiscreteMeasure> meas;
  for (int i = 0; i < 2; ++i) {
    costs.push_back(random_cost(n, 0.01, 1.0, rng));
    meas.emplace_back(random_simplex(n, 0.1, 1.0, rng));
  }
  Vector w(2);
  w << 0.5, 0.5;
  BarycenterProblem prob(std::move(costs), std::move(meas), w);

  std::vector<PotentialFamily> trace;
  PotentialFamily s = PotentialFamily::zeros(2, n);
  trace.push_back(s);
  for (std::int64_t k = 0; k < 400; ++k) {
    s = robust_ibp_step(s, k, prob, eta, tau);
    trace.push_back(s);
  }
  PotentialFamily ref = s;
  for (std::int64_t k = 400; k < 4000; ++k)
    ref = robust_ibp_step(ref, k, prob, eta, tau);

  ContractionRatios r = contraction_diagnostics(trace, ref);
  REQUIRE(!r.R_uu.empty());
  double bound = tau / (tau + eta) + 0.02;
  for (double x : r.R_uu) CHECK(x <= bound);
  for (double x : r.R_uv) CHECK(x <= bound);
}

TEST_CASE("duality-gap stopping is rejected") {
  auto rng = rng_stream("rsbp-tests/gap", 10, 0);
  BarycenterProblem prob = random_problem(2, 3, rng);
  SolverConfig cfg;
  cfg.epsilon = 1e-2;
  cfg.stop = StopRule::DualityGap;
  CHECK_THROWS_AS(solve_rsbp(prob, cfg), ConfigError);
}
