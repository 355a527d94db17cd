#ifndef ROBUST_OT_RSOT_HPP_
#define ROBUST_OT_RSOT_HPP_

#include <tuple>

#include "robust_ot/core.hpp"
#include "robust_ot/types.hpp"

namespace robust_ot {

// Parameter schedule guaranteeing an epsilon-approximation of the
// semi-constrained problem: U = max{3 log n, eps/tau}, eta = eps/U, and the
// iteration count 1 + 2 max{k1, k2}.
struct RsotSchedule {
  double U = 0.0;
  double eta = 0.0;
  double R_bound = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  std::int64_t k_required = 1;
};

// R = max{||log a||_inf, ||log b||_inf} + max{log n, ||C||_inf/eta - log n}.
double dual_radius_bound(const CostMatrix& cost, const DiscreteMeasure& a,
                         const DiscreteMeasure& b, double eta);
double dual_radius_bound(double cost_sup_norm, Eigen::Index n,
                         const DiscreteMeasure& a, const DiscreteMeasure& b,
                         double eta);

RsotSchedule rsot_schedule(Eigen::Index n, double epsilon, double tau,
                           const CostMatrix& cost, const DiscreteMeasure& a,
                           const DiscreteMeasure& b);

// One alternating dual update: even k moves u by the damped rule, odd k
// enforces the column marginal exactly through v.
DualPotentials rsot_step(const DualPotentials& state, std::int64_t k,
                         const CostMatrix& cost, const DiscreteMeasure& a,
                         const DiscreteMeasure& b, double eta, double tau);

// Dual objective h(u,v) = eta ||B(u,v)||_1 + tau <e^{-u/tau}, a> - <v, b>,
// with the mass term reduced in log domain before exponentiation.
double dual_value_rsot(const Vector& u, const Vector& v, const CostMatrix& cost,
                       const DiscreteMeasure& a, const DiscreteMeasure& b,
                       double eta, double tau);

struct RsotSolution {
  TransportPlan plan;
  DualPotentials potentials;
  SolveReport report;
};

RsotSolution solve_rsot(const CostMatrix& cost, const DiscreteMeasure& a,
                        const DiscreteMeasure& b, const SolverConfig& config);

// Backend-general entry point used by the Nystrom path. `cost_sup_norm`
// feeds the schedule when the dense cost is not materialized.
RsotSolution solve_rsot(const GibbsBackend& backend, const DiscreteMeasure& a,
                        const DiscreteMeasure& b, const SolverConfig& config,
                        double cost_sup_norm);

}  // namespace robust_ot

#endif  // ROBUST_OT_RSOT_HPP_
