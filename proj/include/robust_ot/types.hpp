#ifndef ROBUST_OT_TYPES_HPP_
#define ROBUST_OT_TYPES_HPP_

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "robust_ot/errors.hpp"

namespace robust_ot {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Nonnegative weight vector with cached total mass. All algorithms take
// logarithms of the weights, so zero entries are rejected unless the caller
// opts into uniform smoothing.
class DiscreteMeasure {
 public:
  static constexpr double kSmoothingDelta = 1e-9;

  explicit DiscreteMeasure(Vector weights, bool smooth_zeros = false);

  const Vector& weights() const { return weights_; }
  double mass() const { return mass_; }
  Eigen::Index size() const { return weights_.size(); }
  const Vector& log_weights() const { return log_weights_; }

  bool is_probability(double tol = 1e-8) const {
    return std::abs(mass_ - 1.0) <= tol;
  }

 private:
  Vector weights_;
  Vector log_weights_;
  double mass_ = 0.0;
};

// Dense n x n nonnegative cost matrix with cached sup norm.
class CostMatrix {
 public:
  explicit CostMatrix(Matrix entries);

  const Matrix& entries() const { return entries_; }
  double max_entry() const { return max_entry_; }
  Eigen::Index size() const { return entries_.rows(); }

 private:
  Matrix entries_;
  double max_entry_ = 0.0;
};

// Scaling variables (u, v) of the Sinkhorn-type iterations.
struct DualPotentials {
  Vector u;
  Vector v;

  static DualPotentials zeros(Eigen::Index n) {
    return DualPotentials{Vector::Zero(n), Vector::Zero(n)};
  }
  bool finite() const { return u.allFinite() && v.allFinite(); }
};

// Nonnegative plan with recomputed (never incrementally updated) marginals.
class TransportPlan {
 public:
  TransportPlan() = default;  // empty placeholder, filled by a solve
  explicit TransportPlan(Matrix entries);

  const Matrix& entries() const { return entries_; }
  const Vector& row_marginal() const { return row_marginal_; }
  const Vector& col_marginal() const { return col_marginal_; }
  double mass() const { return mass_; }
  Eigen::Index size() const { return entries_.rows(); }

 private:
  Matrix entries_;
  Vector row_marginal_;
  Vector col_marginal_;
  double mass_ = 0.0;
};

enum class ScheduleMode { TheoremSchedule, Manual };
enum class StopRule {
  FixedIterations,
  DualResidual,
  EmpiricalTail,
  ObjectiveTail,
  DualityGap
};

struct SolverConfig {
  double tau = 1.0;
  // TheoremSchedule: epsilon drives the run and eta is derived.
  // Manual: eta must be given explicitly; epsilon is informational.
  std::optional<double> epsilon;
  std::optional<double> eta;
  ScheduleMode schedule = ScheduleMode::TheoremSchedule;
  std::int64_t max_iter = 20'000'000;
  StopRule stop = StopRule::FixedIterations;
  double stop_tol = 0.0;

  void validate() const;
};

struct TracePoint {
  std::int64_t iteration;
  double f_value;
  double g_value;
};

struct DualTracePoint {
  std::int64_t iteration;
  double h_value;
};

struct SolveReport {
  std::int64_t iterations_run = 0;
  std::vector<TracePoint> objective_trace;
  std::vector<DualTracePoint> dual_trace;
  double marginal_residual = 0.0;
  std::vector<double> contraction_estimates;
  double wall_time_seconds = 0.0;

  // Schedule constants echoed so downstream scripts can recompute them.
  double U = 0.0;
  double eta = 0.0;
  double epsilon = 0.0;
  double tau = 0.0;
  double R_bound = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  std::int64_t k_required = 0;
  bool guarantee_valid = false;
  std::string guarantee_note;

  // Un-normalized total mass at exit (UOT-backed solves).
  std::optional<double> raw_mass;
  // Low-rank backend bookkeeping.
  std::optional<int> nystrom_rank;
  std::optional<std::int64_t> clamp_count;
  bool dense_fallback = false;
};

}  // namespace robust_ot

#endif  // ROBUST_OT_TYPES_HPP_
