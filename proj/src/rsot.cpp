#include "robust_ot/rsot.hpp"

#include <chrono>
#include <cmath>

#include "tail_stop.hpp"

namespace robust_ot {

namespace {

std::int64_t round_up_even(std::int64_t k) { return k + (k % 2); }

void check_problem_shapes(Eigen::Index n, const DiscreteMeasure& a,
                          const DiscreteMeasure& b) {
  if (a.size() != n || b.size() != n) {
    throw ShapeError("rsot: cost and measure dimensions differ");
  }
}

}  // namespace

double dual_radius_bound(double cost_sup_norm, Eigen::Index n,
                         const DiscreteMeasure& a, const DiscreteMeasure& b,
                         double eta) {
  double log_a_inf = a.log_weights().cwiseAbs().maxCoeff();
  double log_b_inf = b.log_weights().cwiseAbs().maxCoeff();
  double logn = std::log(static_cast<double>(n));
  return std::max(log_a_inf, log_b_inf) +
         std::max(logn, cost_sup_norm / eta - logn);
}

double dual_radius_bound(const CostMatrix& cost, const DiscreteMeasure& a,
                         const DiscreteMeasure& b, double eta) {
  return dual_radius_bound(cost.max_entry(), cost.size(), a, b, eta);
}

namespace {

RsotSchedule rsot_schedule_from_sup_norm(Eigen::Index n, double epsilon,
                                         double tau, double cost_sup_norm,
                                         const DiscreteMeasure& a,
                                         const DiscreteMeasure& b) {
  if (n < 2) throw ConfigError("rsot_schedule: n must be at least 2");
  if (!(epsilon > 0.0) || !(tau > 0.0)) {
    throw ConfigError("rsot_schedule: epsilon and tau must be positive");
  }
  check_problem_shapes(n, a, b);
  RsotSchedule s;
  double logn = std::log(static_cast<double>(n));
  s.U = std::max(3.0 * logn, epsilon / tau);
  s.eta = epsilon / s.U;
  s.R_bound = dual_radius_bound(cost_sup_norm, n, a, b, s.eta);
  const double R = s.R_bound;
  const double eta = s.eta;
  // log((tau+eta)/tau) via log1p to survive eta << tau.
  double log_rate = std::log1p(eta / tau);
  s.k1 = std::log(8.0 * R * (2.0 * tau + eta) / (3.0 * eta)) / log_rate;
  s.k2 = (1.0 + tau / eta) *
         std::log(3.0 * tau * R *
                  (2.0 * (eta + tau) + 3.0 * R * (2.0 * tau + eta)) /
                  (eta * eta * logn));
  double k = 1.0 + 2.0 * std::max(s.k1, s.k2);
  s.k_required = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(k)));
  return s;
}

}  // namespace

RsotSchedule rsot_schedule(Eigen::Index n, double epsilon, double tau,
                           const CostMatrix& cost, const DiscreteMeasure& a,
                           const DiscreteMeasure& b) {
  if (cost.size() != n) throw ShapeError("rsot_schedule: cost size != n");
  return rsot_schedule_from_sup_norm(n, epsilon, tau, cost.max_entry(), a, b);
}

DualPotentials rsot_step(const DualPotentials& state, std::int64_t k,
                         const CostMatrix& cost, const DiscreteMeasure& a,
                         const DiscreteMeasure& b, double eta, double tau) {
  check_problem_shapes(cost.size(), a, b);
  DenseGibbsBackend backend(cost);
  DualPotentials next = state;
  Vector marg;
  if (k % 2 == 0) {
    backend.log_row_marginal(state.u, state.v, eta, marg);
    next.u = (eta * tau / (eta + tau)) *
             (state.u / eta + a.log_weights() - marg);
  } else {
    backend.log_col_marginal(state.u, state.v, eta, marg);
    next.v = state.v + eta * (b.log_weights() - marg);
  }
  return next;
}

double dual_value_rsot(const Vector& u, const Vector& v, const CostMatrix& cost,
                       const DiscreteMeasure& a, const DiscreteMeasure& b,
                       double eta, double tau) {
  DenseGibbsBackend backend(cost);
  double mass = std::exp(backend.log_mass(u, v, eta));
  double penalty = ((-u / tau).array().exp() * a.weights().array()).sum();
  return eta * mass + tau * penalty - v.dot(b.weights());
}

namespace {

// Shared alternating-minimization driver for the semi-constrained dual.
RsotSolution run_rsot(const GibbsBackend& backend, const DiscreteMeasure& a,
                      const DiscreteMeasure& b, const SolverConfig& config,
                      double cost_sup_norm, const CostMatrix* dense_cost) {
  config.validate();
  const Eigen::Index n = backend.size();
  check_problem_shapes(n, a, b);

  SolveReport report;
  report.tau = config.tau;
  double eta;
  std::int64_t target_iters;
  if (config.schedule == ScheduleMode::TheoremSchedule) {
    if (!a.is_probability() || !b.is_probability()) {
      throw ConfigError(
          "solve_rsot: TheoremSchedule requires mass-1 inputs; use Manual "
          "mode for general masses");
    }
    RsotSchedule s = rsot_schedule_from_sup_norm(n, *config.epsilon,
                                                 config.tau, cost_sup_norm,
                                                 a, b);
    eta = s.eta;
    report.U = s.U;
    report.R_bound = s.R_bound;
    report.k1 = s.k1;
    report.k2 = s.k2;
    report.k_required = s.k_required;
    report.epsilon = *config.epsilon;
    report.guarantee_valid = true;
    report.guarantee_note = "f_rsot(X^k) - f_rsot(X_hat) <= epsilon";
    target_iters = round_up_even(s.k_required);
    if (target_iters > config.max_iter) {
      throw ConfigError("solve_rsot: max_iter smaller than the required "
                        "iteration count " + std::to_string(target_iters));
    }
  } else {
    eta = *config.eta;
    report.epsilon = config.epsilon.value_or(0.0);
    report.guarantee_valid = false;
    report.guarantee_note = "no epsilon-guarantee (manual schedule)";
    target_iters = config.max_iter - (config.max_iter % 2);
    report.k_required = target_iters;
  }
  report.eta = eta;

  const double tau = config.tau;
  const std::int64_t stride =
      std::max<std::int64_t>(2, round_up_even(target_iters / 800));

  auto t0 = std::chrono::steady_clock::now();
  Vector u = Vector::Zero(n), v = Vector::Zero(n);
  Vector marg(n);
  // State for residual stopping and contraction estimates.
  Vector u_prev = u, v_prev = v;
  double prev_change = -1.0;
  detail::TailStop tail_stop;
  detail::ObjectiveTail<TracePoint> obj_tail;

  auto record = [&](std::int64_t iters) {
    if (dense_cost == nullptr) return;
    TransportPlan plan = materialize_plan(u, v, backend, eta, false);
    double f = objective_rsot(plan, *dense_cost, a, tau);
    double g = f - eta * entropy(plan);
    report.objective_trace.push_back({iters, f, g});
    report.dual_trace.push_back(
        {iters, dual_value_rsot(u, v, *dense_cost, a, b, eta, tau)});
  };

  std::int64_t k = 0;
  record(0);
  while (k < target_iters) {
    // u-step (k even)
    backend.log_row_marginal(u, v, eta, marg);
    u = (eta * tau / (eta + tau)) * (u / eta + a.log_weights() - marg);
    ++k;
    // v-step (k odd): enforces the column marginal exactly.
    backend.log_col_marginal(u, v, eta, marg);
    v += eta * (b.log_weights() - marg);
    ++k;

    double change = std::max((u - u_prev).cwiseAbs().maxCoeff(),
                             (v - v_prev).cwiseAbs().maxCoeff());
    if (k % stride == 0) {
      record(k);
      if (prev_change > 1e-300) {
        report.contraction_estimates.push_back(change / prev_change);
      }
      if (config.stop == StopRule::ObjectiveTail &&
          obj_tail.done(report.objective_trace, config.stop_tol)) {
        break;
      }
      // Entropic primal minus dual value; nonnegative, zero at the joint
      // optimum, and immune to mid-run objective stalls.
      if (config.stop == StopRule::DualityGap &&
          report.objective_trace.back().g_value -
                  report.dual_trace.back().h_value <=
              config.stop_tol) {
        break;
      }
    }
    if ((k % 512 == 0 || k >= target_iters) &&
        (!u.allFinite() || !v.allFinite())) {
      throw ConvergenceError("solve_rsot: non-finite potentials at iteration " +
                             std::to_string(k));
    }
    if (config.stop == StopRule::DualResidual && change <= config.stop_tol) {
      break;
    }
    if (config.stop == StopRule::EmpiricalTail &&
        tail_stop.done(change, config.stop_tol)) {
      break;
    }
    u_prev = u;
    v_prev = v;
    prev_change = change;
  }
  report.iterations_run = k;
  if (report.objective_trace.empty() ||
      report.objective_trace.back().iteration != k) {
    record(k);
  }

  backend.log_col_marginal(u, v, eta, marg);
  report.marginal_residual =
      (marg.array().exp() - b.weights().array()).abs().sum();
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  TransportPlan plan = materialize_plan(u, v, backend, eta, false);
  return RsotSolution{std::move(plan), DualPotentials{std::move(u), std::move(v)},
                      std::move(report)};
}

}  // namespace

RsotSolution solve_rsot(const CostMatrix& cost, const DiscreteMeasure& a,
                        const DiscreteMeasure& b, const SolverConfig& config) {
  DenseGibbsBackend backend(cost);
  return run_rsot(backend, a, b, config, cost.max_entry(), &cost);
}

RsotSolution solve_rsot(const GibbsBackend& backend, const DiscreteMeasure& a,
                        const DiscreteMeasure& b, const SolverConfig& config,
                        double cost_sup_norm) {
  return run_rsot(backend, a, b, config, cost_sup_norm, nullptr);
}

}  // namespace robust_ot
