#include "robust_ot/barycenter.hpp"

#include <chrono>
#include <cmath>

#include "tail_stop.hpp"

namespace robust_ot {

BarycenterProblem::BarycenterProblem(std::vector<CostMatrix> costs,
                                     std::vector<DiscreteMeasure> measures,
                                     Vector weights)
    : costs_(std::move(costs)),
      measures_(std::move(measures)),
      weights_(std::move(weights)) {
  if (costs_.empty() || costs_.size() != measures_.size() ||
      static_cast<Eigen::Index>(costs_.size()) != weights_.size()) {
    throw ShapeError("BarycenterProblem: need m matching costs/measures/weights");
  }
  const Eigen::Index n = costs_.front().size();
  for (const auto& c : costs_) {
    if (c.size() != n) throw ShapeError("BarycenterProblem: cost sizes differ");
  }
  for (const auto& p : measures_) {
    if (p.size() != n) {
      throw ShapeError("BarycenterProblem: measure lengths differ from n");
    }
  }
  if (weights_.minCoeff() <= 0.0) {
    throw ConfigError("BarycenterProblem: weights must be positive");
  }
  if (std::abs(weights_.sum() - 1.0) > 1e-12) {
    throw ConfigError("BarycenterProblem: weights must sum to 1");
  }
}

RsbpSchedule rsbp_schedule(const BarycenterProblem& problem, double epsilon,
                           double tau) {
  if (!(epsilon > 0.0) || !(tau > 0.0)) {
    throw ConfigError("rsbp_schedule: epsilon and tau must be positive");
  }
  const Eigen::Index n = problem.n();
  if (n < 2) throw ConfigError("rsbp_schedule: n must be at least 2");
  RsbpSchedule s;
  double logn = std::log(static_cast<double>(n));
  s.U = std::max({2.0 + 2.0 * logn, 2.0 * epsilon,
                  3.0 * epsilon * logn / tau});
  s.eta = epsilon / s.U;
  double R = 0.0;
  for (int i = 0; i < problem.m(); ++i) {
    double c_inf = problem.cost(i).max_entry();
    double logp_inf =
        problem.measure(i).log_weights().cwiseAbs().maxCoeff();
    R += std::max(logn, c_inf / s.eta - logn) + logp_inf +
         (s.eta + tau) / (s.eta * tau) * c_inf;
  }
  s.R_rsbp = R;
  double k = 2.0 + 2.0 * (tau / s.eta + 1.0) *
                       std::log(4.0 * R * tau * tau / (s.eta * s.eta));
  auto rounded = static_cast<std::int64_t>(std::ceil(k));
  s.k_required = std::max<std::int64_t>(2, rounded + (rounded % 2));
  s.guarantee_valid = (problem.m() == 2);
  return s;
}

PotentialFamily PotentialFamily::zeros(int m, Eigen::Index n) {
  PotentialFamily f;
  f.u.assign(m, Vector::Zero(n));
  f.v.assign(m, Vector::Zero(n));
  return f;
}

bool PotentialFamily::finite() const {
  for (const auto& x : u) {
    if (!x.allFinite()) return false;
  }
  for (const auto& x : v) {
    if (!x.allFinite()) return false;
  }
  return true;
}

namespace {

void ibp_u_step(PotentialFamily& state, const BarycenterProblem& problem,
                double eta, double tau, Vector& marg) {
  const double damp = eta * tau / (eta + tau);
  for (int i = 0; i < problem.m(); ++i) {
    DenseGibbsBackend backend(problem.cost(i));
    backend.log_row_marginal(state.u[i], state.v[i], eta, marg);
    state.u[i] = damp * (state.u[i] / eta +
                         problem.measure(i).log_weights() - marg);
  }
}

void ibp_v_step(PotentialFamily& state, const BarycenterProblem& problem,
                double eta, Vector& marg, std::vector<Vector>& scratch) {
  const int m = problem.m();
  scratch.resize(m);
  Vector mean = Vector::Zero(problem.n());
  for (int i = 0; i < m; ++i) {
    DenseGibbsBackend backend(problem.cost(i));
    backend.log_col_marginal(state.u[i], state.v[i], eta, marg);
    scratch[i] = state.v[i] / eta - marg;
    mean += problem.weights()[i] * scratch[i];
  }
  for (int i = 0; i < m; ++i) {
    state.v[i] = eta * (scratch[i] - mean);
  }
}

}  // namespace

PotentialFamily robust_ibp_step(const PotentialFamily& state, std::int64_t k,
                                const BarycenterProblem& problem, double eta,
                                double tau) {
  PotentialFamily next = state;
  Vector marg;
  std::vector<Vector> scratch;
  if (k % 2 == 0) {
    ibp_u_step(next, problem, eta, tau, marg);
  } else {
    ibp_v_step(next, problem, eta, marg, scratch);
  }
  return next;
}

double rsbp_objective(const std::vector<TransportPlan>& plans,
                      const BarycenterProblem& problem, double tau) {
  if (static_cast<int>(plans.size()) != problem.m()) {
    throw ShapeError("rsbp_objective: plan count != m");
  }
  double acc = 0.0;
  for (int i = 0; i < problem.m(); ++i) {
    acc += problem.weights()[i] *
           objective_rsot(plans[i], problem.cost(i), problem.measure(i), tau);
  }
  return acc;
}

double rsbp_entropic_objective(const std::vector<TransportPlan>& plans,
                               const BarycenterProblem& problem, double tau,
                               double eta) {
  double acc = rsbp_objective(plans, problem, tau);
  for (int i = 0; i < problem.m(); ++i) {
    acc -= problem.weights()[i] * eta * entropy(plans[i]);
  }
  return acc;
}

RsbpSolution solve_rsbp(const BarycenterProblem& problem,
                        const SolverConfig& config) {
  config.validate();
  const int m = problem.m();
  const Eigen::Index n = problem.n();

  SolveReport report;
  report.tau = config.tau;
  double eta;
  std::int64_t target_iters;
  if (config.schedule == ScheduleMode::TheoremSchedule) {
    for (int i = 0; i < m; ++i) {
      if (!problem.measure(i).is_probability()) {
        throw ConfigError("solve_rsbp: TheoremSchedule requires mass-1 inputs");
      }
    }
    RsbpSchedule s = rsbp_schedule(problem, *config.epsilon, config.tau);
    eta = s.eta;
    report.U = s.U;
    report.R_bound = s.R_rsbp;
    report.k_required = s.k_required;
    report.epsilon = *config.epsilon;
    report.guarantee_valid = s.guarantee_valid;
    report.guarantee_note =
        s.guarantee_valid
            ? "f_rsbp(X^k) - f_rsbp(X_hat) <= epsilon (m = 2)"
            : "iteration bound hypothetical for m >= 3";
    target_iters = s.k_required;
    if (target_iters > config.max_iter) {
      throw ConfigError("solve_rsbp: max_iter smaller than the required "
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
    throw ConfigError("solve_rsbp: duality-gap stopping is only available for the "
                      "semi-constrained solver");
  }
  const double tau = config.tau;
  const std::int64_t stride =
      std::max<std::int64_t>(2, (target_iters / 800) + (target_iters / 800) % 2);

  auto t0 = std::chrono::steady_clock::now();
  PotentialFamily state = PotentialFamily::zeros(m, n);
  Vector marg(n);
  std::vector<Vector> scratch;
  PotentialFamily prev_round = state;
  double prev_change = -1.0;
  detail::TailStop tail_stop;
  detail::ObjectiveTail<TracePoint> obj_tail;

  auto family_change = [&](const PotentialFamily& x,
                           const PotentialFamily& y) {
    double c = 0.0;
    for (int i = 0; i < m; ++i) {
      c = std::max(c, (x.u[i] - y.u[i]).cwiseAbs().maxCoeff());
      c = std::max(c, (x.v[i] - y.v[i]).cwiseAbs().maxCoeff());
    }
    return c;
  };

  auto materialize_all = [&](bool normalize) {
    std::vector<TransportPlan> plans;
    plans.reserve(m);
    for (int i = 0; i < m; ++i) {
      plans.push_back(materialize_plan(state.u[i], state.v[i], problem.cost(i),
                                       eta, normalize));
    }
    return plans;
  };

  auto record = [&](std::int64_t iters) {
    auto plans = materialize_all(false);
    double f = rsbp_objective(plans, problem, tau);
    double g = rsbp_entropic_objective(plans, problem, tau, eta);
    report.objective_trace.push_back({iters, f, g});
  };

  std::int64_t k = 0;
  record(0);
  while (k < target_iters) {
    ibp_u_step(state, problem, eta, tau, marg);
    ++k;
    ibp_v_step(state, problem, eta, marg, scratch);
    ++k;

    double change = family_change(state, prev_round);
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
    if ((k % 512 == 0 || k >= target_iters) && !state.finite()) {
      throw ConvergenceError("solve_rsbp: non-finite potentials at iteration " +
                             std::to_string(k));
    }
    if (config.stop == StopRule::DualResidual && change <= config.stop_tol) {
      break;
    }
    if (config.stop == StopRule::EmpiricalTail &&
        tail_stop.done(change, config.stop_tol)) {
      break;
    }
    prev_round = state;
    prev_change = change;
  }
  report.iterations_run = k;
  if (report.objective_trace.empty() ||
      report.objective_trace.back().iteration != k) {
    record(k);
  }
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  auto raw_plans = materialize_all(false);
  auto normalized_plans = materialize_all(true);

  // The barycenter is the column marginal of the first normalized plan; the
  // spread across plans is reported, not averaged away.
  // Barycenter entries are strictly positive in exact arithmetic; exact
  // zeros can only arise from exp underflow, so a tiny floor is applied.
  Vector q = normalized_plans.front().col_marginal().cwiseMax(1e-300);
  double spread = 0.0;
  for (int i = 1; i < m; ++i) {
    spread = std::max(
        spread, (normalized_plans[i].col_marginal() - q).cwiseAbs().maxCoeff());
  }
  report.marginal_residual = spread;

  return RsbpSolution{std::move(raw_plans),
                      std::move(normalized_plans),
                      DiscreteMeasure(q),
                      std::move(state),
                      std::move(report),
                      spread};
}

ContractionRatios contraction_diagnostics(
    const std::vector<PotentialFamily>& trace,
    const PotentialFamily& reference) {
  ContractionRatios out;
  if (trace.size() < 3) return out;
  const int m = static_cast<int>(reference.u.size());
  auto u_err = [&](const PotentialFamily& f) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) {
      s += (f.u[i] - reference.u[i]).cwiseAbs().maxCoeff();
    }
    return s;
  };
  auto v_err = [&](const PotentialFamily& f) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) {
      s += (f.v[i] - reference.v[i]).cwiseAbs().maxCoeff();
    }
    return s;
  };
  for (std::size_t k = 2; k + 1 < trace.size(); k += 2) {
    double num = u_err(trace[k + 1]);
    double den_v = v_err(trace[k]);
    double den_u = u_err(trace[k - 1]);
    if (den_v > 1e-300 && den_u > 1e-300) {
      out.k.push_back(static_cast<std::int64_t>(k));
      out.R_uv.push_back(num / den_v);
      out.R_uu.push_back(num / den_u);
    }
  }
  return out;
}

}  // namespace robust_ot
