#ifndef ROBUST_OT_CORE_HPP_
#define ROBUST_OT_CORE_HPP_

#include <cstdint>
#include <memory>

#include "robust_ot/types.hpp"

namespace robust_ot {

// Generalized KL divergence sum_i [x_i log(x_i/y_i) - x_i + y_i] with the
// convention 0 log 0 = 0. Requires y > 0 componentwise.
double generalized_kl(const Vector& x, const Vector& y);

// H(X) = sum_ij -X_ij (log X_ij - 1). For mass-1 plans this lies in
// [1, 2 log n + 1].
double entropy(const TransportPlan& plan);
double entropy(const Matrix& entries);

struct LogMarginals {
  Vector log_row;
  Vector log_col;
  double log_mass = 0.0;
};

// Marginal backend for the scaled Gibbs kernel B(u,v) with
// log B_ij = (u_i + v_j)/eta + log K_ij. The dense backend stores
// log K_ij = -C_ij/eta implicitly via C; the Nystrom backend works through
// low-rank factors. All reductions are overflow-safe.
class GibbsBackend {
 public:
  virtual ~GibbsBackend() = default;
  virtual Eigen::Index size() const = 0;
  virtual void log_row_marginal(const Vector& u, const Vector& v, double eta,
                                Vector& out) const = 0;
  virtual void log_col_marginal(const Vector& u, const Vector& v, double eta,
                                Vector& out) const = 0;
  virtual double log_mass(const Vector& u, const Vector& v,
                          double eta) const = 0;
  // Dense matrix of log K_ij (the negated scaled cost). O(n^2); used for
  // plan materialization and diagnostics only.
  virtual Matrix log_kernel(double eta) const = 0;
};

class DenseGibbsBackend final : public GibbsBackend {
 public:
  explicit DenseGibbsBackend(const CostMatrix& cost) : cost_(cost) {}

  Eigen::Index size() const override { return cost_.size(); }
  void log_row_marginal(const Vector& u, const Vector& v, double eta,
                        Vector& out) const override;
  void log_col_marginal(const Vector& u, const Vector& v, double eta,
                        Vector& out) const override;
  double log_mass(const Vector& u, const Vector& v, double eta) const override;
  Matrix log_kernel(double eta) const override;

  const CostMatrix& cost() const { return cost_; }

 private:
  // Cost divided by eta, cached per eta; ct_scaled_ is its transpose so row
  // marginals read contiguous columns.
  void refresh_cache(double eta) const;

  const CostMatrix& cost_;
  mutable double cached_eta_ = 0.0;
  mutable Matrix c_scaled_;
  mutable Matrix ct_scaled_;
};

// Row/column/total log-sums of B(u,v) for a dense cost, max-subtracted.
LogMarginals log_gibbs_marginals(const Vector& u, const Vector& v,
                                 const CostMatrix& cost, double eta);

// Materializes B(u,v), optionally normalized to unit mass. Normalization is
// applied as a log-domain shift, so it cannot overflow for finite inputs.
// The raw path throws if an exponent leaves the representable range.
TransportPlan materialize_plan(const Vector& u, const Vector& v,
                               const CostMatrix& cost, double eta,
                               bool normalize);
TransportPlan materialize_plan(const Vector& u, const Vector& v,
                               const GibbsBackend& backend, double eta,
                               bool normalize);

// f_rsot(X) = <C, X> + tau KL(X 1 || a)
double objective_rsot(const TransportPlan& plan, const CostMatrix& cost,
                      const DiscreteMeasure& a, double tau);
// f_rot = f_uot = <C, X> + tau KL(X 1 || a) + tau KL(X^T 1 || b); the two
// names differ only in the feasible set they are minimized over.
double objective_rot(const TransportPlan& plan, const CostMatrix& cost,
                     const DiscreteMeasure& a, const DiscreteMeasure& b,
                     double tau);
double objective_uot(const TransportPlan& plan, const CostMatrix& cost,
                     const DiscreteMeasure& a, const DiscreteMeasure& b,
                     double tau);

// Entropic variants g = f - eta H(X).
double entropic_objective_rsot(const TransportPlan& plan,
                               const CostMatrix& cost,
                               const DiscreteMeasure& a, double tau,
                               double eta);
double entropic_objective_rot(const TransportPlan& plan, const CostMatrix& cost,
                              const DiscreteMeasure& a,
                              const DiscreteMeasure& b, double tau, double eta);

}  // namespace robust_ot

#endif  // ROBUST_OT_CORE_HPP_
