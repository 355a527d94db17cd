#ifndef ROBUST_OT_LOWRANK_HPP_
#define ROBUST_OT_LOWRANK_HPP_

#include <cstdint>
#include <vector>

#include "robust_ot/core.hpp"
#include "robust_ot/types.hpp"

namespace robust_ot {

// n points in R^d with a verified bound on every point norm.
class PointCloud {
 public:
  explicit PointCloud(Matrix points);  // n x d, radius = max row norm
  PointCloud(Matrix points, double radius);

  Eigen::Index size() const { return points_.rows(); }
  Eigen::Index dim() const { return points_.cols(); }
  const Matrix& points() const { return points_; }
  double radius() const { return radius_; }

  // Squared-Euclidean cost matrix of the cloud against itself.
  CostMatrix squared_distance_cost() const;

 private:
  Matrix points_;
  double radius_ = 0.0;
};

// Nystrom factors of the Gaussian kernel K_ij = exp(-||x_i - x_j||^2 / eta):
// K_tilde = V A^+ V^T with V the cross kernel against the landmarks and A^+
// a spectral pseudo-inverse of the landmark Gram block. A_half is a square
// root (A^+ = A_half A_half^T); evaluations go through it so K_tilde is
// symmetric positive semidefinite by construction even when the landmark
// block is near-singular and A^+ alone would amplify round-off.
struct LowRankKernel {
  Matrix V;                     // n x r
  Matrix A_pinv;                // r x r
  Matrix A_half;                // r x r
  int rank = 0;
  double diag_err = 0.0;        // 1 - min_i K_tilde_ii
  std::vector<int> landmarks;   // nested across doubling trials

  Matrix materialize() const {
    Matrix W = V * A_half;
    return W * W.transpose();
  }
  double diag_entry(Eigen::Index i) const {
    return (V.row(i) * A_half).squaredNorm();
  }
};

// Error budget wiring for a problem kind: the target accuracy is split
// between the kernel approximation and the solver tolerance.
struct NysBudget {
  double Z = 0.0;
  double eps_prime = 0.0;
  double threshold = 0.0;
};

enum class NysProblemKind { RSOT, ROT };

// Gaussian kernel row exp(-||x - l_j||^2 / eta) against a landmark set.
Vector gaussian_kernel_row(const Vector& x, const Matrix& landmarks,
                           double eta);

// Doubles the landmark count from 1 (nested uniform sampling without
// replacement, seeded) until the diagonal error drops below approx_tol, or
// falls back to an exact rank-n factorization at r >= n.
LowRankKernel adaptive_nystrom(const PointCloud& cloud, double eta,
                               double approx_tol, std::uint64_t seed);

// O(nr) marginal computations through the factors; negative intermediates
// from float round-off are clamped at 1e-300 and counted.
class LowRankGibbsBackend final : public GibbsBackend {
 public:
  LowRankGibbsBackend(LowRankKernel kernel, double eta);

  Eigen::Index size() const override { return kernel_.V.rows(); }
  void log_row_marginal(const Vector& u, const Vector& v, double eta,
                        Vector& out) const override;
  void log_col_marginal(const Vector& u, const Vector& v, double eta,
                        Vector& out) const override;
  double log_mass(const Vector& u, const Vector& v, double eta) const override;
  Matrix log_kernel(double eta) const override;

  const LowRankKernel& kernel() const { return kernel_; }
  std::int64_t clamp_count() const { return clamp_count_; }

 private:
  LowRankKernel kernel_;
  double eta_;
  mutable std::int64_t clamp_count_ = 0;
};

LogMarginals lowrank_log_marginals(const Vector& u, const Vector& v,
                                   const LowRankKernel& kernel, double eta);

struct NysSolution {
  TransportPlan plan;
  SolveReport report;
  NysBudget budget;
  double eta = 0.0;
};

// Robust-NysSink: derives (Z, eps', threshold) for the problem kind, builds
// the adaptive factorization, and runs the matching solver through the
// low-rank backend. Falls back to the dense path (with a report flag) when
// the threshold underflows to zero.
NysSolution solve_nys(const PointCloud& cloud, const DiscreteMeasure& a,
                      const DiscreteMeasure& b, NysProblemKind kind,
                      double epsilon, double tau, std::uint64_t seed);

}  // namespace robust_ot

#endif  // ROBUST_OT_LOWRANK_HPP_
