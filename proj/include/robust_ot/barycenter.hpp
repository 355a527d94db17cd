#ifndef ROBUST_OT_BARYCENTER_HPP_
#define ROBUST_OT_BARYCENTER_HPP_

#include <vector>

#include "robust_ot/core.hpp"
#include "robust_ot/types.hpp"

namespace robust_ot {

// m cost matrices and measures on one fixed support of size n, with
// positive weights summing to 1.
class BarycenterProblem {
 public:
  BarycenterProblem(std::vector<CostMatrix> costs,
                    std::vector<DiscreteMeasure> measures, Vector weights);

  int m() const { return static_cast<int>(costs_.size()); }
  Eigen::Index n() const { return costs_.front().size(); }
  const CostMatrix& cost(int i) const { return costs_[i]; }
  const DiscreteMeasure& measure(int i) const { return measures_[i]; }
  const Vector& weights() const { return weights_; }

 private:
  std::vector<CostMatrix> costs_;
  std::vector<DiscreteMeasure> measures_;
  Vector weights_;
};

struct RsbpSchedule {
  double U = 0.0;
  double eta = 0.0;
  double R_rsbp = 0.0;
  std::int64_t k_required = 2;
  bool guarantee_valid = false;  // iteration bound proved only for m = 2
};

RsbpSchedule rsbp_schedule(const BarycenterProblem& problem, double epsilon,
                           double tau);

// One dual family per input measure; the weighted sum of the v_i is pinned
// to zero by the centering update.
struct PotentialFamily {
  std::vector<Vector> u;
  std::vector<Vector> v;

  static PotentialFamily zeros(int m, Eigen::Index n);
  bool finite() const;
};

// Even k: damped u-rule per problem. Odd k: weighted-centering v-rule, after
// which all column marginals of the B(u_i, v_i; C_i) coincide.
PotentialFamily robust_ibp_step(const PotentialFamily& state, std::int64_t k,
                                const BarycenterProblem& problem, double eta,
                                double tau);

// f_rsbp = sum_i w_i [<C_i, X_i> + tau KL(X_i 1 || p_i)]
double rsbp_objective(const std::vector<TransportPlan>& plans,
                      const BarycenterProblem& problem, double tau);
double rsbp_entropic_objective(const std::vector<TransportPlan>& plans,
                               const BarycenterProblem& problem, double tau,
                               double eta);

struct RsbpSolution {
  std::vector<TransportPlan> raw_plans;         // no-norm problem
  std::vector<TransportPlan> normalized_plans;  // mass-1 problem
  DiscreteMeasure barycenter;                   // common column marginal
  PotentialFamily potentials;
  SolveReport report;
  double marginal_spread = 0.0;  // max componentwise gap across the m
                                 // normalized column marginals
};

RsbpSolution solve_rsbp(const BarycenterProblem& problem,
                        const SolverConfig& config);

// Figure-style convergence ratios: for each even k in the trace,
// R_uv = sum_i |du_i^{k+1}| / sum_i |dv_i^k| and
// R_uu = sum_i |du_i^{k+1}| / sum_i |du_i^{k-1}|, errors taken against a
// long-run reference. Ratios with denominators below 1e-300 are skipped.
struct ContractionRatios {
  std::vector<std::int64_t> k;  // even iteration indices
  std::vector<double> R_uv;
  std::vector<double> R_uu;
};

ContractionRatios contraction_diagnostics(
    const std::vector<PotentialFamily>& trace,
    const PotentialFamily& reference);

}  // namespace robust_ot

#endif  // ROBUST_OT_BARYCENTER_HPP_
