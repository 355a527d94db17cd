#include "robust_ot/core.hpp"

#include <cmath>
#include <limits>

namespace robust_ot {

namespace {

// logsumexp of a vector expression with max-subtraction.
double logsumexp(const Vector& x) {
  double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((x.array() - m).exp().sum());
}

}  // namespace

double generalized_kl(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) {
    throw ShapeError("generalized_kl: length mismatch");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(y[i] > 0.0)) {
      throw NonPositiveWeightError(
          "generalized_kl: second argument must be strictly positive");
    }
    if (x[i] < 0.0) {
      throw ConfigError("generalized_kl: first argument must be >= 0");
    }
    double term = (x[i] > 0.0) ? x[i] * std::log(x[i] / y[i]) : 0.0;
    acc += term - x[i] + y[i];
  }
  return acc < 0.0 ? 0.0 : acc;  // clip tiny negative float residue
}

double entropy(const Matrix& entries) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < entries.cols(); ++j) {
    for (Eigen::Index i = 0; i < entries.rows(); ++i) {
      double x = entries(i, j);
      if (std::isnan(x)) {
        throw ConfigError("entropy: NaN entry");
      }
      if (x > 0.0) acc -= x * (std::log(x) - 1.0);
    }
  }
  return acc;
}

double entropy(const TransportPlan& plan) { return entropy(plan.entries()); }

void DenseGibbsBackend::refresh_cache(double eta) const {
  if (eta == cached_eta_) return;
  c_scaled_ = cost_.entries() / eta;
  ct_scaled_ = c_scaled_.transpose();
  cached_eta_ = eta;
}

void DenseGibbsBackend::log_row_marginal(const Vector& u, const Vector& v,
                                         double eta, Vector& out) const {
  refresh_cache(eta);
  const Eigen::Index n = ct_scaled_.rows();
  out.resize(n);
  Vector scratch(n), ve = v / eta;
  for (Eigen::Index i = 0; i < n; ++i) {
    scratch = ve - ct_scaled_.col(i);
    double m = scratch.maxCoeff();
    // The max term contributes exp(0) = 1, so entries below -700 are far
    // beyond double precision; clamping them avoids subnormal slow paths.
    out[i] = u[i] / eta +
             m + std::log((scratch.array() - m).max(-700.0).exp().sum());
  }
}

void DenseGibbsBackend::log_col_marginal(const Vector& u, const Vector& v,
                                         double eta, Vector& out) const {
  refresh_cache(eta);
  const Eigen::Index n = c_scaled_.rows();
  out.resize(n);
  Vector scratch(n), ue = u / eta;
  for (Eigen::Index j = 0; j < n; ++j) {
    scratch = ue - c_scaled_.col(j);
    double m = scratch.maxCoeff();
    out[j] = v[j] / eta +
             m + std::log((scratch.array() - m).max(-700.0).exp().sum());
  }
}

double DenseGibbsBackend::log_mass(const Vector& u, const Vector& v,
                                   double eta) const {
  Vector rows;
  log_row_marginal(u, v, eta, rows);
  return rows.maxCoeff() +
         std::log((rows.array() - rows.maxCoeff()).exp().sum());
}

Matrix DenseGibbsBackend::log_kernel(double eta) const {
  return -cost_.entries() / eta;
}

LogMarginals log_gibbs_marginals(const Vector& u, const Vector& v,
                                 const CostMatrix& cost, double eta) {
  if (u.size() != cost.size() || v.size() != cost.size()) {
    throw ShapeError("log_gibbs_marginals: dimension mismatch");
  }
  if (!(eta > 0.0)) {
    throw ConfigError("log_gibbs_marginals: eta must be positive");
  }
  DenseGibbsBackend backend(cost);
  LogMarginals out;
  backend.log_row_marginal(u, v, eta, out.log_row);
  backend.log_col_marginal(u, v, eta, out.log_col);
  out.log_mass = logsumexp(out.log_row);
  return out;
}

TransportPlan materialize_plan(const Vector& u, const Vector& v,
                               const GibbsBackend& backend, double eta,
                               bool normalize) {
  if (u.size() != backend.size() || v.size() != backend.size()) {
    throw ShapeError("materialize_plan: dimension mismatch");
  }
  if (!(eta > 0.0)) {
    throw ConfigError("materialize_plan: eta must be positive");
  }
  const Eigen::Index n = backend.size();
  Matrix log_entries = backend.log_kernel(eta);
  log_entries.colwise() += u / eta;
  log_entries.rowwise() += (v / eta).transpose();
  double shift = 0.0;
  if (normalize) {
    shift = backend.log_mass(u, v, eta);
  }
  Matrix entries(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double e = log_entries(i, j) - shift;
      if (!normalize && e > 709.0) {
        throw ConvergenceError(
            "materialize_plan: raw exponent overflows; use normalize=true");
      }
      entries(i, j) = std::exp(e);
    }
  }
  return TransportPlan(std::move(entries));
}

TransportPlan materialize_plan(const Vector& u, const Vector& v,
                               const CostMatrix& cost, double eta,
                               bool normalize) {
  DenseGibbsBackend backend(cost);
  return materialize_plan(u, v, backend, eta, normalize);
}

namespace {

double transport_cost(const TransportPlan& plan, const CostMatrix& cost) {
  if (plan.size() != cost.size()) {
    throw ShapeError("objective: plan and cost dimensions differ");
  }
  return (plan.entries().array() * cost.entries().array()).sum();
}

}  // namespace

double objective_rsot(const TransportPlan& plan, const CostMatrix& cost,
                      const DiscreteMeasure& a, double tau) {
  if (a.size() != plan.size()) {
    throw ShapeError("objective_rsot: measure length mismatch");
  }
  return transport_cost(plan, cost) +
         tau * generalized_kl(plan.row_marginal(), a.weights());
}

double objective_rot(const TransportPlan& plan, const CostMatrix& cost,
                     const DiscreteMeasure& a, const DiscreteMeasure& b,
                     double tau) {
  if (a.size() != plan.size() || b.size() != plan.size()) {
    throw ShapeError("objective_rot: measure length mismatch");
  }
  return transport_cost(plan, cost) +
         tau * generalized_kl(plan.row_marginal(), a.weights()) +
         tau * generalized_kl(plan.col_marginal(), b.weights());
}

double objective_uot(const TransportPlan& plan, const CostMatrix& cost,
                     const DiscreteMeasure& a, const DiscreteMeasure& b,
                     double tau) {
  return objective_rot(plan, cost, a, b, tau);
}

double entropic_objective_rsot(const TransportPlan& plan,
                               const CostMatrix& cost,
                               const DiscreteMeasure& a, double tau,
                               double eta) {
  return objective_rsot(plan, cost, a, tau) - eta * entropy(plan);
}

double entropic_objective_rot(const TransportPlan& plan, const CostMatrix& cost,
                              const DiscreteMeasure& a,
                              const DiscreteMeasure& b, double tau,
                              double eta) {
  return objective_rot(plan, cost, a, b, tau) - eta * entropy(plan);
}

}  // namespace robust_ot
