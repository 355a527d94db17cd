#ifndef ROBUST_OT_ORACLE_HPP_
#define ROBUST_OT_ORACLE_HPP_

#include <cstdint>
#include <vector>

#include "robust_ot/barycenter.hpp"
#include "robust_ot/types.hpp"

// Independent reference solvers used only by tests and acceptance runs.
// Deliberately shares no iteration code with the main solver paths: the
// primal problems are attacked by entropic mirror descent (multiplicative
// updates) with Armijo backtracking and multi-restart, the cross-check paths
// by straight-line long-double recursions. `stationarity_residual` is a
// linear-minimization gap <grad f, X> - min_vertex <grad f, v>, an upper
// bound on f(X) - min f by convexity, so `tol` certifies the objective.

namespace robust_ot {

struct OracleResult {
  double objective = 0.0;
  TransportPlan plan;
  double stationarity_residual = 0.0;
  int restarts_used = 0;
  // Best objective reached by each converged restart, for dispersion checks.
  std::vector<double> restart_objectives;
  // Populated by oracle_rsbp only.
  std::vector<Matrix> plans;
  Vector barycenter;
};

// Euclidean projection onto {x >= 0, sum(x) = total}.
Vector project_scaled_simplex(const Vector& x, double total);

// Mirror descent on f_rsot over {X >= 0, X^T 1 = b}.
OracleResult oracle_rsot(const CostMatrix& C, const DiscreteMeasure& a,
                         const DiscreteMeasure& b, double tau, double tol,
                         std::uint64_t seed = 7, int restarts = 20);

// Mirror descent on f_rot over the n^2-simplex of plans.
OracleResult oracle_rot(const CostMatrix& C, const DiscreteMeasure& a,
                        const DiscreteMeasure& b, double tau, double tol,
                        std::uint64_t seed = 7, int restarts = 20);

// Alternating minimization over (barycenter q on the simplex; per-measure
// plans with column marginal q); inner problems solved by the f_rsot mirror
// descent machinery, outer steps by projected subgradient on q.
OracleResult oracle_rsbp(const BarycenterProblem& problem, double tau,
                         double tol, std::uint64_t seed = 7, int restarts = 5);

// Long-double cross-check paths (independent transliterations of the dual
// recursions at a very small smoothing, returning the primal objective of the
// rounded plan). These exist so the mirror-descent oracles can be validated
// against an entirely different computation.
double rsot_dual_reference(const CostMatrix& C, const DiscreteMeasure& a,
                           const DiscreteMeasure& b, double tau,
                           double eta = 1e-5, long max_iter = 2'000'000);
double rot_sinkhorn_reference(const CostMatrix& C, const DiscreteMeasure& a,
                              const DiscreteMeasure& b, double tau,
                              double eta = 1e-5, long max_iter = 1'000'000);
double rsbp_ibp_reference(const BarycenterProblem& problem, double tau,
                          double eta = 1e-5, long max_iter = 2'000'000);

}  // namespace robust_ot

#endif  // ROBUST_OT_ORACLE_HPP_
