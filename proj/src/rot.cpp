#include "robust_ot/rot.hpp"

#include <chrono>
#include <cmath>

#include "tail_stop.hpp"

namespace robust_ot {

namespace {

std::int64_t round_up_even(std::int64_t k) { return k + (k % 2); }

RotSchedule rot_schedule_from_sup_norm(Eigen::Index n, double epsilon,
                                       double tau, double cost_sup_norm,
                                       const DiscreteMeasure& a,
                                       const DiscreteMeasure& b) {
  if (n < 2) throw ConfigError("rot_schedule: n must be at least 2");
  if (!(epsilon > 0.0) || !(tau > 0.0)) {
    throw ConfigError("rot_schedule: epsilon and tau must be positive");
  }
  RotSchedule s;
  double logn = std::log(static_cast<double>(n));
  s.U = std::max({3.0 * (tau + 2.0) / (4.0 * (tau + 1.0)) + 2.0 * logn,
                  2.0 * epsilon, 5.0 * epsilon * logn / tau});
  s.eta = epsilon / s.U;
  s.R_bound = dual_radius_bound(cost_sup_norm, n, a, b, s.eta);
  double k = 1.0 + (tau / s.eta + 1.0) *
                       std::log(8.0 * s.R_bound * tau * (tau + 1.0) /
                                (s.eta * s.eta));
  s.k_required =
      std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(k)));
  return s;
}

}  // namespace

RotSchedule rot_schedule(Eigen::Index n, double epsilon, double tau,
                         const CostMatrix& cost, const DiscreteMeasure& a,
                         const DiscreteMeasure& b) {
  if (cost.size() != n || a.size() != n || b.size() != n) {
    throw ShapeError("rot_schedule: dimension mismatch");
  }
  return rot_schedule_from_sup_norm(n, epsilon, tau, cost.max_entry(), a, b);
}

DualPotentials uot_sinkhorn_step(const DualPotentials& state, std::int64_t k,
                                 const CostMatrix& cost,
                                 const DiscreteMeasure& a,
                                 const DiscreteMeasure& b, double eta,
                                 double tau) {
  if (cost.size() != a.size() || cost.size() != b.size()) {
    throw ShapeError("uot_sinkhorn_step: dimension mismatch");
  }
  DenseGibbsBackend backend(cost);
  DualPotentials next = state;
  Vector marg;
  const double damp = eta * tau / (eta + tau);
  if (k % 2 == 0) {
    backend.log_row_marginal(state.u, state.v, eta, marg);
    next.u = damp * (state.u / eta + a.log_weights() - marg);
  } else {
    backend.log_col_marginal(state.u, state.v, eta, marg);
    next.v = damp * (state.v / eta + b.log_weights() - marg);
  }
  return next;
}

std::pair<double, double> check_rot_stationarity(const Vector& u,
                                                 const Vector& v,
                                                 const CostMatrix& cost,
                                                 const DiscreteMeasure& a,
                                                 const DiscreteMeasure& b,
                                                 double eta, double tau) {
  DenseGibbsBackend backend(cost);
  Vector log_row, log_col;
  backend.log_row_marginal(u, v, eta, log_row);
  backend.log_col_marginal(u, v, eta, log_col);
  double m = log_row.maxCoeff();
  double log_mass = m + std::log((log_row.array() - m).exp().sum());
  Vector row_norm = (log_row.array() - log_mass).exp();
  Vector col_norm = (log_col.array() - log_mass).exp();
  Vector row_target = ((-u / tau).array().exp() * a.weights().array());
  Vector col_target = ((-v / tau).array().exp() * b.weights().array());
  return {(row_norm - row_target).cwiseAbs().maxCoeff(),
          (col_norm - col_target).cwiseAbs().maxCoeff()};
}

namespace {

RotSolution run_uot(const GibbsBackend& backend, const DiscreteMeasure& a,
                    const DiscreteMeasure& b, const SolverConfig& config,
                    double cost_sup_norm, const CostMatrix* dense_cost,
                    bool normalize) {
  config.validate();
  const Eigen::Index n = backend.size();
  if (a.size() != n || b.size() != n) {
    throw ShapeError("solve_rot: dimension mismatch");
  }

  SolveReport report;
  report.tau = config.tau;
  double eta;
  std::int64_t target_iters;
  if (config.schedule == ScheduleMode::TheoremSchedule) {
    if (!a.is_probability() || !b.is_probability()) {
      throw ConfigError("solve_rot: TheoremSchedule requires mass-1 inputs");
    }
    RotSchedule s = rot_schedule_from_sup_norm(n, *config.epsilon, config.tau,
                                               cost_sup_norm, a, b);
    eta = s.eta;
    report.U = s.U;
    report.R_bound = s.R_bound;
    report.k_required = s.k_required;
    report.epsilon = *config.epsilon;
    report.guarantee_valid = normalize;
    report.guarantee_note =
        normalize ? "f_rot(X^k) - f_rot(X_hat) <= epsilon"
                  : "raw UOT path; guarantee applies after normalization";
    target_iters = round_up_even(s.k_required);
    if (target_iters > config.max_iter) {
      throw ConfigError("solve_rot: max_iter smaller than the required "
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

  if (config.stop == StopRule::DualityGap) {
    throw ConfigError("solve_rot: duality-gap stopping is only available for the "
                      "semi-constrained solver");
  }
  const double tau = config.tau;
  const double damp = eta * tau / (eta + tau);
  const std::int64_t stride =
      std::max<std::int64_t>(2, round_up_even(target_iters / 800));

  auto t0 = std::chrono::steady_clock::now();
  Vector u = Vector::Zero(n), v = Vector::Zero(n);
  Vector marg(n);
  Vector u_prev = u, v_prev = v;
  double prev_change = -1.0;
  detail::TailStop tail_stop;
  detail::ObjectiveTail<TracePoint> obj_tail;

  auto record = [&](std::int64_t iters) {
    if (dense_cost == nullptr) return;
    TransportPlan plan = materialize_plan(u, v, backend, eta, normalize);
    double f = objective_rot(plan, *dense_cost, a, b, tau);
    double g = f - eta * entropy(plan);
    report.objective_trace.push_back({iters, f, g});
  };

  std::int64_t k = 0;
  record(0);
  while (k < target_iters) {
    backend.log_row_marginal(u, v, eta, marg);
    u = damp * (u / eta + a.log_weights() - marg);
    ++k;
    backend.log_col_marginal(u, v, eta, marg);
    v = damp * (v / eta + b.log_weights() - marg);
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
    }
    if ((k % 512 == 0 || k >= target_iters) &&
        (!u.allFinite() || !v.allFinite())) {
      throw ConvergenceError("solve_rot: non-finite potentials at iteration " +
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

  report.raw_mass = std::exp(backend.log_mass(u, v, eta));
  backend.log_col_marginal(u, v, eta, marg);
  double log_mass = backend.log_mass(u, v, eta);
  if (normalize) {
    report.marginal_residual =
        ((marg.array() - log_mass).exp() - b.weights().array()).abs().sum();
  } else {
    report.marginal_residual =
        (marg.array().exp() - b.weights().array()).abs().sum();
  }
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  if (normalize) {
    // Shift both potentials by tau log x so the first-order conditions of
    // the normalized dual hold at the returned point; the normalized plan
    // is invariant under a common shift of (u, v).
    u.array() += tau * log_mass;
    v.array() += tau * log_mass;
  }
  TransportPlan plan = materialize_plan(u, v, backend, eta, normalize);
  return RotSolution{std::move(plan),
                     DualPotentials{std::move(u), std::move(v)},
                     std::move(report)};
}

}  // namespace

RotSolution solve_rot(const CostMatrix& cost, const DiscreteMeasure& a,
                      const DiscreteMeasure& b, const SolverConfig& config) {
  DenseGibbsBackend backend(cost);
  return run_uot(backend, a, b, config, cost.max_entry(), &cost, true);
}

RotSolution solve_rot(const GibbsBackend& backend, const DiscreteMeasure& a,
                      const DiscreteMeasure& b, const SolverConfig& config,
                      double cost_sup_norm) {
  return run_uot(backend, a, b, config, cost_sup_norm, nullptr, true);
}

RotSolution solve_uot(const CostMatrix& cost, const DiscreteMeasure& a,
                      const DiscreteMeasure& b, const SolverConfig& config) {
  DenseGibbsBackend backend(cost);
  return run_uot(backend, a, b, config, cost.max_entry(), &cost, false);
}

}  // namespace robust_ot
