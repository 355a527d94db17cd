#include "robust_ot/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "robust_ot/rot.hpp"
#include "robust_ot/rsot.hpp"

namespace robust_ot {

PointCloud::PointCloud(Matrix points) : points_(std::move(points)) {
  if (points_.rows() == 0) throw ShapeError("PointCloud: empty");
  radius_ = points_.rowwise().norm().maxCoeff();
}

PointCloud::PointCloud(Matrix points, double radius)
    : points_(std::move(points)), radius_(radius) {
  if (points_.rows() == 0) throw ShapeError("PointCloud: empty");
  if (points_.rowwise().norm().maxCoeff() > radius_) {
    throw ConfigError("PointCloud: stated radius does not bound all points");
  }
}

CostMatrix PointCloud::squared_distance_cost() const {
  const Eigen::Index n = points_.rows();
  Matrix C(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      C(i, j) = (points_.row(i) - points_.row(j)).squaredNorm();
    }
  }
  return CostMatrix(std::move(C));
}

Vector gaussian_kernel_row(const Vector& x, const Matrix& landmarks,
                           double eta) {
  if (!(eta > 0.0)) throw ConfigError("gaussian_kernel_row: eta must be > 0");
  if (landmarks.cols() != x.size()) {
    throw ShapeError("gaussian_kernel_row: dimension mismatch");
  }
  Vector out(landmarks.rows());
  for (Eigen::Index j = 0; j < landmarks.rows(); ++j) {
    out[j] =
        std::exp(-(landmarks.row(j).transpose() - x).squaredNorm() / eta);
  }
  return out;
}

namespace {

// Square root of the spectral pseudo-inverse: eigenvalues below the cutoff
// are dropped (their columns zeroed), so A_half A_half^T = A^+.
Matrix spectral_pinv_half(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A);
  const Vector& w = eig.eigenvalues();
  double cutoff = 1e-12 * std::max(w.cwiseAbs().maxCoeff(), 0.0);
  Vector w_inv_sqrt = Vector::Zero(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] > cutoff) w_inv_sqrt[i] = 1.0 / std::sqrt(w[i]);
  }
  return eig.eigenvectors() * w_inv_sqrt.asDiagonal();
}

LowRankKernel build_factors(const PointCloud& cloud, double eta,
                            const std::vector<int>& landmarks) {
  const Eigen::Index n = cloud.size();
  const int r = static_cast<int>(landmarks.size());
  Matrix L(r, cloud.dim());
  for (int j = 0; j < r; ++j) L.row(j) = cloud.points().row(landmarks[j]);
  LowRankKernel k;
  k.V.resize(n, r);
  for (Eigen::Index i = 0; i < n; ++i) {
    k.V.row(i) =
        gaussian_kernel_row(cloud.points().row(i).transpose(), L, eta)
            .transpose();
  }
  Matrix A(r, r);
  for (int j = 0; j < r; ++j) A.row(j) = k.V.row(landmarks[j]);
  A = 0.5 * (A + A.transpose());
  k.A_half = spectral_pinv_half(A);
  k.A_pinv = k.A_half * k.A_half.transpose();
  k.rank = r;
  k.landmarks = landmarks;
  double min_diag = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    min_diag = std::min(min_diag, k.diag_entry(i));
  }
  k.diag_err = 1.0 - min_diag;
  return k;
}

}  // namespace

LowRankKernel adaptive_nystrom(const PointCloud& cloud, double eta,
                               double approx_tol, std::uint64_t seed) {
  if (!(approx_tol > 0.0)) {
    throw ConfigError("adaptive_nystrom: approx_tol must be positive");
  }
  const Eigen::Index n = cloud.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  for (int r = 1; true; r *= 2) {
    if (r >= n) {
      // Exact rank-n fallback: landmarks are all points, K_tilde = K.
      std::vector<int> all(n);
      std::iota(all.begin(), all.end(), 0);
      return build_factors(cloud, eta, all);
    }
    std::vector<int> landmarks(order.begin(), order.begin() + r);
    LowRankKernel k = build_factors(cloud, eta, landmarks);
    if (k.diag_err <= approx_tol) return k;
  }
}

LowRankGibbsBackend::LowRankGibbsBackend(LowRankKernel kernel, double eta)
    : kernel_(std::move(kernel)), eta_(eta) {
  if (!(eta > 0.0)) throw ConfigError("LowRankGibbsBackend: eta must be > 0");
}

namespace {
constexpr double kClampFloor = 1e-300;
}

void LowRankGibbsBackend::log_row_marginal(const Vector& u, const Vector& v,
                                           double eta, Vector& out) const {
  const Eigen::Index n = size();
  double v_max = v.maxCoeff();
  Vector w = ((v.array() - v_max) / eta).exp();
  Vector s = kernel_.V *
             (kernel_.A_half *
              (kernel_.A_half.transpose() * (kernel_.V.transpose() * w)));
  out.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double x = s[i];
    if (x < kClampFloor) {
      x = kClampFloor;
      ++clamp_count_;
    }
    out[i] = u[i] / eta + v_max / eta + std::log(x);
  }
}

void LowRankGibbsBackend::log_col_marginal(const Vector& u, const Vector& v,
                                           double eta, Vector& out) const {
  const Eigen::Index n = size();
  double u_max = u.maxCoeff();
  Vector w = ((u.array() - u_max) / eta).exp();
  Vector s = kernel_.V *
             (kernel_.A_half *
              (kernel_.A_half.transpose() * (kernel_.V.transpose() * w)));
  out.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double x = s[j];
    if (x < kClampFloor) {
      x = kClampFloor;
      ++clamp_count_;
    }
    out[j] = v[j] / eta + u_max / eta + std::log(x);
  }
}

double LowRankGibbsBackend::log_mass(const Vector& u, const Vector& v,
                                     double eta) const {
  Vector rows;
  log_row_marginal(u, v, eta, rows);
  double m = rows.maxCoeff();
  return m + std::log((rows.array() - m).exp().sum());
}

Matrix LowRankGibbsBackend::log_kernel(double /*eta*/) const {
  Matrix K = kernel_.materialize();
  for (Eigen::Index j = 0; j < K.cols(); ++j) {
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
      double x = K(i, j);
      if (x < kClampFloor) {
        x = kClampFloor;
        ++clamp_count_;
      }
      K(i, j) = std::log(x);
    }
  }
  return K;
}

LogMarginals lowrank_log_marginals(const Vector& u, const Vector& v,
                                   const LowRankKernel& kernel, double eta) {
  LowRankGibbsBackend backend(kernel, eta);
  LogMarginals out;
  backend.log_row_marginal(u, v, eta, out.log_row);
  backend.log_col_marginal(u, v, eta, out.log_col);
  out.log_mass = backend.log_mass(u, v, eta);
  return out;
}

namespace {

double schedule_U(NysProblemKind kind, Eigen::Index n, double eps,
                  double tau) {
  double logn = std::log(static_cast<double>(n));
  if (kind == NysProblemKind::RSOT) {
    return std::max(3.0 * logn, eps / tau);
  }
  return std::max({3.0 * (tau + 2.0) / (4.0 * (tau + 1.0)) + 2.0 * logn,
                   2.0 * eps, 5.0 * eps * logn / tau});
}

double budget_Z(NysProblemKind kind, double eta, double tau) {
  if (kind == NysProblemKind::RSOT) return 1.0 + 2.0 * (tau + eta);
  return 2.0 + eta + 2.0 * tau / eta;
}

}  // namespace

NysSolution solve_nys(const PointCloud& cloud, const DiscreteMeasure& a,
                      const DiscreteMeasure& b, NysProblemKind kind,
                      double epsilon, double tau, std::uint64_t seed) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ConfigError("solve_nys: epsilon must lie in (0, 1)");
  }
  const Eigen::Index n = cloud.size();
  if (a.size() != n || b.size() != n) {
    throw ShapeError("solve_nys: measures must match the cloud size");
  }

  // Z is evaluated once at the regularization the requested accuracy would
  // prescribe; the solver then runs its own schedule at the tightened eps'.
  NysBudget budget;
  double eta_z = epsilon / schedule_U(kind, n, epsilon, tau);
  budget.Z = budget_Z(kind, eta_z, tau);
  budget.eps_prime = std::min(1.0, epsilon / budget.Z);
  double eta =
      budget.eps_prime / schedule_U(kind, n, budget.eps_prime, tau);
  double R = cloud.radius();
  budget.threshold =
      (budget.eps_prime / 2.0) * std::exp(-4.0 * R * R / eta);

  SolverConfig config;
  config.tau = tau;
  config.epsilon = budget.eps_prime;
  config.schedule = ScheduleMode::TheoremSchedule;
  config.max_iter = 50'000'000;

  if (budget.threshold <= 0.0) {
    // Kernel accuracy requirement underflowed; run the dense path instead.
    CostMatrix C = cloud.squared_distance_cost();
    SolveReport report;
    TransportPlan plan = [&] {
      if (kind == NysProblemKind::RSOT) {
        auto sol = solve_rsot(C, a, b, config);
        report = std::move(sol.report);
        return std::move(sol.plan);
      }
      auto sol = solve_rot(C, a, b, config);
      report = std::move(sol.report);
      return std::move(sol.plan);
    }();
    report.dense_fallback = true;
    report.nystrom_rank = static_cast<int>(n);
    return NysSolution{std::move(plan), std::move(report), budget, report.eta};
  }

  LowRankKernel kernel = adaptive_nystrom(cloud, eta, budget.threshold, seed);
  LowRankGibbsBackend backend(std::move(kernel), eta);
  // Cost entries are bounded by the squared cloud diameter.
  double cost_sup = 4.0 * R * R;

  SolveReport report;
  TransportPlan plan = [&] {
    if (kind == NysProblemKind::RSOT) {
      auto sol = solve_rsot(backend, a, b, config, cost_sup);
      report = std::move(sol.report);
      return std::move(sol.plan);
    }
    auto sol = solve_rot(backend, a, b, config, cost_sup);
    report = std::move(sol.report);
    return std::move(sol.plan);
  }();
  report.nystrom_rank = backend.kernel().rank;
  report.clamp_count = backend.clamp_count();
  double solver_eta = report.eta;
  return NysSolution{std::move(plan), std::move(report), budget, solver_eta};
}

}  // namespace robust_ot
