#ifndef ROBUST_OT_ROT_HPP_
#define ROBUST_OT_ROT_HPP_

#include "robust_ot/core.hpp"
#include "robust_ot/rsot.hpp"
#include "robust_ot/types.hpp"

namespace robust_ot {

struct RotSchedule {
  double U = 0.0;
  double eta = 0.0;
  double R_bound = 0.0;
  std::int64_t k_required = 1;
};

// U = max{3(tau+2)/(4(tau+1)) + 2 log n, 2 eps, 5 eps log n / tau},
// eta = eps/U, k_required = ceil(1 + (tau/eta + 1) log(8 R tau (tau+1)/eta^2)).
RotSchedule rot_schedule(Eigen::Index n, double epsilon, double tau,
                         const CostMatrix& cost, const DiscreteMeasure& a,
                         const DiscreteMeasure& b);

// Damped Sinkhorn step on the UOT dual: both u- and v-updates carry the
// eta tau/(eta + tau) factor.
DualPotentials uot_sinkhorn_step(const DualPotentials& state, std::int64_t k,
                                 const CostMatrix& cost,
                                 const DiscreteMeasure& a,
                                 const DiscreteMeasure& b, double eta,
                                 double tau);

// Sup-norm residuals of the first-order conditions of the entropic-ROT dual:
// B1/||B|| = e^{-u/tau} . a (rows) and the column analogue.
std::pair<double, double> check_rot_stationarity(const Vector& u,
                                                 const Vector& v,
                                                 const CostMatrix& cost,
                                                 const DiscreteMeasure& a,
                                                 const DiscreteMeasure& b,
                                                 double eta, double tau);

struct RotSolution {
  TransportPlan plan;
  DualPotentials potentials;
  SolveReport report;
};

// UOT-type damped Sinkhorn followed by log-domain normalization; the plan
// has mass exactly 1 and the report keeps the un-normalized mass.
RotSolution solve_rot(const CostMatrix& cost, const DiscreteMeasure& a,
                      const DiscreteMeasure& b, const SolverConfig& config);
RotSolution solve_rot(const GibbsBackend& backend, const DiscreteMeasure& a,
                      const DiscreteMeasure& b, const SolverConfig& config,
                      double cost_sup_norm);

// Un-normalized UOT solve (objective f_uot); public so the optimality
// identities can be checked on the raw plan.
RotSolution solve_uot(const CostMatrix& cost, const DiscreteMeasure& a,
                      const DiscreteMeasure& b, const SolverConfig& config);

}  // namespace robust_ot

#endif  // ROBUST_OT_ROT_HPP_
