#include "robust_ot/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace robust_ot {
namespace {

constexpr double kTinyMass = 1e-300;
constexpr double kArmijo = 1e-4;
constexpr Eigen::Index kOracleMaxN = 64;

// Independent generalized-KL evaluation (the oracles share no numeric
// routines with the main solver paths).
double kl_gen(const Vector& x, const Vector& y) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0) acc += x[i] * std::log(x[i] / y[i]);
    acc += y[i] - x[i];
  }
  return acc;
}

double f_rsot_raw(const Matrix& C, const Matrix& X, const Vector& a,
                  double tau) {
  return (C.array() * X.array()).sum() + tau * kl_gen(X.rowwise().sum(), a);
}

Matrix grad_rsot_raw(const Matrix& C, const Matrix& X, const Vector& a,
                     double tau) {
  Vector r = X.rowwise().sum().cwiseMax(kTinyMass);
  Vector d = tau * (r.array() / a.array()).log();
  return C.colwise() + d;
}

double f_rot_raw(const Matrix& C, const Matrix& X, const Vector& a,
                 const Vector& b, double tau) {
  return (C.array() * X.array()).sum() + tau * kl_gen(X.rowwise().sum(), a) +
         tau * kl_gen(X.colwise().sum().transpose(), b);
}

Matrix grad_rot_raw(const Matrix& C, const Matrix& X, const Vector& a,
                    const Vector& b, double tau) {
  Vector r = X.rowwise().sum().cwiseMax(kTinyMass);
  Vector c = X.colwise().sum().transpose().cwiseMax(kTinyMass);
  Vector dr = tau * (r.array() / a.array()).log();
  Vector dc = tau * (c.array() / b.array()).log();
  Matrix G = C.colwise() + dr;
  G.rowwise() += dc.transpose();
  return G;
}

struct PgdOutcome {
  Matrix X;
  double objective = 0.0;
  double residual = 0.0;
  bool converged = false;
};

// Entropic mirror descent (multiplicative updates) with Armijo backtracking.
// Additive projected gradient stalls on these objectives: the optimal free
// marginals scale like e^{-||C||/tau}, where the KL curvature makes Euclidean
// steps vanish. The multiplicative geometry reaches such points in O(||C||)
// iterations. `renormalize` maps log-scaled entries (log X - t grad) back to
// the feasible set, and `gap` is a linear-minimization gap
// <grad, X> - min_vertex <grad, v>, which upper-bounds f(X) - min f by
// convexity, so the stopping rule certifies the returned objective.
PgdOutcome run_pgd(const std::function<double(const Matrix&)>& value,
                   const std::function<Matrix(const Matrix&)>& grad,
                   const std::function<Matrix(const Matrix&)>& renormalize,
                   const std::function<double(const Matrix&, const Matrix&)>&
                       gap,
                   Matrix X, double tol, long max_iter) {
  PgdOutcome out;
  double f = value(X);
  double t = 1.0;
  for (long it = 0; it < max_iter; ++it) {
    Matrix G = grad(X);
    out.residual = gap(X, G);
    if (out.residual <= tol) {
      out.converged = true;
      break;
    }
    Matrix log_x = X.array().max(kTinyMass).log();
    while (true) {
      Matrix Xn = renormalize(log_x - t * G);
      double fn = value(Xn);
      double slope = (G.array() * (Xn - X).array()).sum();
      if (fn <= f + kArmijo * slope || t < 1e-18) {
        X = std::move(Xn);
        f = fn;
        break;
      }
      t *= 0.5;
    }
    t = std::min(2.0 * t, 1e6);
  }
  out.X = std::move(X);
  out.objective = f;
  return out;
}

// KL projection of log-scaled entries onto {X >= 0, X^T 1 = b}: each column
// is exponentiated with max-subtraction and rescaled to mass b_j.
Matrix renormalize_columns(const Matrix& L, const Vector& b) {
  Matrix out(L.rows(), L.cols());
  for (Eigen::Index j = 0; j < L.cols(); ++j) {
    Vector col = (L.col(j).array() - L.col(j).maxCoeff()).exp();
    out.col(j) = col * (b[j] / col.sum());
  }
  return out;
}

// KL projection onto the unit-mass set {X >= 0, ||X||_1 = 1}.
Matrix renormalize_total(const Matrix& L) {
  Matrix out = (L.array() - L.maxCoeff()).exp();
  return out / out.sum();
}

// Gap over per-column scaled simplexes: vertices put mass b_j on one row.
double gap_columns(const Matrix& X, const Matrix& G, const Vector& b) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    acc += G.col(j).dot(X.col(j)) - b[j] * G.col(j).minCoeff();
  }
  return acc;
}

double gap_total(const Matrix& X, const Matrix& G) {
  return (G.array() * X.array()).sum() - G.minCoeff();
}

Matrix random_column_start(const Vector& b, Eigen::Index n,
                           std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix X(n, b.size());
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = gauss(rng);
    z = (z.array() - z.maxCoeff()).exp();
    X.col(j) = z * (b[j] / z.sum());
  }
  return X;
}

struct RsotInner {
  Matrix X;
  double objective = 0.0;
  double residual = 0.0;
};

// Single-start inner solve used by the barycenter oracle (warm-started).
RsotInner solve_rsot_inner(const Matrix& C, const Vector& a, const Vector& b,
                           double tau, double tol, Matrix X0, long max_iter) {
  auto out = run_pgd(
      [&](const Matrix& X) { return f_rsot_raw(C, X, a, tau); },
      [&](const Matrix& X) { return grad_rsot_raw(C, X, a, tau); },
      [&](const Matrix& L) { return renormalize_columns(L, b); },
      [&](const Matrix& X, const Matrix& G) { return gap_columns(X, G, b); },
      renormalize_columns(X0.array().max(kTinyMass).log(), b), tol, max_iter);
  return {std::move(out.X), out.objective, out.residual};
}

}  // namespace

Vector project_scaled_simplex(const Vector& x, double total) {
  if (total < 0.0) throw ConfigError("project_scaled_simplex: negative total");
  const Eigen::Index n = x.size();
  if (total == 0.0) return Vector::Zero(n);
  std::vector<double> sorted(x.data(), x.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cum = 0.0;
  double theta = sorted[0] - total;
  for (Eigen::Index k = 0; k < n; ++k) {
    cum += sorted[k];
    double cand = (cum - total) / static_cast<double>(k + 1);
    if (sorted[k] - cand > 0.0) theta = cand;
  }
  return (x.array() - theta).max(0.0);
}

OracleResult oracle_rsot(const CostMatrix& C, const DiscreteMeasure& a,
                         const DiscreteMeasure& b, double tau, double tol,
                         std::uint64_t seed, int restarts) {
  const Eigen::Index n = C.size();
  if (n > kOracleMaxN) throw ConfigError("oracle_rsot: instance too large");
  if (a.size() != n || b.size() != n) {
    throw ShapeError("oracle_rsot: measure length mismatch");
  }
  const Matrix& Cm = C.entries();
  const Vector& av = a.weights();
  const Vector& bv = b.weights();
  if (n == 1) {
    Matrix X(1, 1);
    X(0, 0) = bv[0];
    OracleResult r;
    r.objective = f_rsot_raw(Cm, X, av, tau);
    r.plan = TransportPlan(std::move(X));
    r.restarts_used = 0;
    return r;
  }

  auto value = [&](const Matrix& X) { return f_rsot_raw(Cm, X, av, tau); };
  auto grad = [&](const Matrix& X) { return grad_rsot_raw(Cm, X, av, tau); };
  auto renorm = [&](const Matrix& L) { return renormalize_columns(L, bv); };
  auto gap = [&](const Matrix& X, const Matrix& G) {
    return gap_columns(X, G, bv);
  };

  std::mt19937_64 rng(seed);
  OracleResult best;
  best.objective = std::numeric_limits<double>::infinity();
  bool any_converged = false;
  for (int s = 0; s < restarts; ++s) {
    Matrix X0 = (s == 0) ? Matrix((av / av.sum()) * bv.transpose())
                         : random_column_start(bv, n, rng);
    auto out = run_pgd(value, grad, renorm, gap, std::move(X0), tol, 400'000);
    any_converged = any_converged || out.converged;
    if (out.converged) best.restart_objectives.push_back(out.objective);
    // Only converged restarts are candidates, so the reported residual
    // certifies the returned objective.
    if (out.converged && out.objective < best.objective) {
      best.objective = out.objective;
      best.plan = TransportPlan(out.X);
      best.stationarity_residual = out.residual;
    }
  }
  best.restarts_used = restarts;
  if (!any_converged) {
    throw ConvergenceError("oracle_rsot: no restart reached the tolerance");
  }
  return best;
}

OracleResult oracle_rot(const CostMatrix& C, const DiscreteMeasure& a,
                        const DiscreteMeasure& b, double tau, double tol,
                        std::uint64_t seed, int restarts) {
  const Eigen::Index n = C.size();
  if (n > kOracleMaxN) throw ConfigError("oracle_rot: instance too large");
  if (a.size() != n || b.size() != n) {
    throw ShapeError("oracle_rot: measure length mismatch");
  }
  const Matrix& Cm = C.entries();
  const Vector& av = a.weights();
  const Vector& bv = b.weights();
  if (n == 1) {
    Matrix X(1, 1);
    X(0, 0) = 1.0;
    OracleResult r;
    r.objective = f_rot_raw(Cm, X, av, bv, tau);
    r.plan = TransportPlan(std::move(X));
    r.restarts_used = 0;
    return r;
  }

  auto value = [&](const Matrix& X) { return f_rot_raw(Cm, X, av, bv, tau); };
  auto grad = [&](const Matrix& X) {
    return grad_rot_raw(Cm, X, av, bv, tau);
  };
  auto renorm = [&](const Matrix& L) { return renormalize_total(L); };
  auto gap = [&](const Matrix& X, const Matrix& G) { return gap_total(X, G); };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  OracleResult best;
  best.objective = std::numeric_limits<double>::infinity();
  bool any_converged = false;
  for (int s = 0; s < restarts; ++s) {
    Matrix X0;
    if (s == 0) {
      X0 = (av / av.sum()) * (bv / bv.sum()).transpose();
    } else {
      X0.resize(n, n);
      for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) X0(i, j) = gauss(rng);
      }
      X0 = (X0.array() - X0.maxCoeff()).exp();
      X0 /= X0.sum();
    }
    auto out = run_pgd(value, grad, renorm, gap, std::move(X0), tol, 400'000);
    any_converged = any_converged || out.converged;
    if (out.converged) best.restart_objectives.push_back(out.objective);
    if (out.converged && out.objective < best.objective) {
      best.objective = out.objective;
      best.plan = TransportPlan(out.X);
      best.stationarity_residual = out.residual;
    }
  }
  best.restarts_used = restarts;
  if (!any_converged) {
    throw ConvergenceError("oracle_rot: no restart reached the tolerance");
  }
  return best;
}

OracleResult oracle_rsbp(const BarycenterProblem& problem, double tau,
                         double tol, std::uint64_t seed, int restarts) {
  const int m = problem.m();
  const Eigen::Index n = problem.n();
  if (n > 8) throw ConfigError("oracle_rsbp: instance too large");

  // Objective as a function of the barycenter q alone: each plan solves an
  // f_rsot problem with column marginal q; a subgradient in q_j is the
  // weighted sum of the column KKT multipliers min_i [C_ij + tau log(r_i/p_i)].
  struct Eval {
    double F = 0.0;
    Vector subgrad;
    std::vector<Matrix> plans;
    double max_inner_residual = 0.0;
  };
  auto evaluate = [&](const Vector& q, std::vector<Matrix> warm) -> Eval {
    Eval e;
    e.subgrad = Vector::Zero(n);
    e.plans.resize(m);
    for (int i = 0; i < m; ++i) {
      const Matrix& Ci = problem.cost(i).entries();
      const Vector& pi = problem.measure(i).weights();
      Matrix X0 = warm.empty() ? Matrix((pi / pi.sum()) * q.transpose())
                               : std::move(warm[i]);
      auto inner =
          solve_rsot_inner(Ci, pi, q, tau, tol, std::move(X0), 200'000);
      e.F += problem.weights()[i] * inner.objective;
      e.max_inner_residual = std::max(e.max_inner_residual, inner.residual);
      Vector r = inner.X.rowwise().sum().cwiseMax(kTinyMass);
      Vector d = tau * (r.array() / pi.array()).log();
      for (Eigen::Index j = 0; j < n; ++j) {
        e.subgrad[j] +=
            problem.weights()[i] * (Ci.col(j) + d).minCoeff();
      }
      e.plans[i] = std::move(inner.X);
    }
    return e;
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  OracleResult best;
  best.objective = std::numeric_limits<double>::infinity();
  bool any_converged = false;
  for (int s = 0; s < restarts; ++s) {
    Vector q;
    if (s == 0) {
      q = Vector::Constant(n, 1.0 / static_cast<double>(n));
    } else {
      q.resize(n);
      for (Eigen::Index j = 0; j < n; ++j) q[j] = gauss(rng);
      q = (q.array() - q.maxCoeff()).exp();
      q /= q.sum();
    }
    Eval cur = evaluate(q, {});
    double sup_g = std::max(cur.subgrad.cwiseAbs().maxCoeff(), 1e-12);
    double t0 = 1.0 / sup_g;
    double t = t0;
    double outer_resid = 0.0;
    bool converged = false;
    for (int it = 0; it < 500; ++it) {
      Vector qr = project_scaled_simplex(q - t0 * cur.subgrad, 1.0);
      outer_resid = (q - qr).norm() / t0;
      if (outer_resid <= tol * 10.0) {
        converged = true;
        break;
      }
      bool moved = false;
      while (t >= 1e-16 * t0) {
        Vector qn = project_scaled_simplex(q - t * cur.subgrad, 1.0);
        Eval en = evaluate(qn, cur.plans);
        double slope = cur.subgrad.dot(qn - q);
        if (en.F <= cur.F + kArmijo * slope) {
          q = std::move(qn);
          cur = std::move(en);
          moved = true;
          break;
        }
        t *= 0.5;
      }
      if (!moved) break;
      t = std::min(2.0 * t, 1e3 * t0);
    }
    any_converged = any_converged || converged;
    if (converged) best.restart_objectives.push_back(cur.F);
    if (converged && cur.F < best.objective) {
      best.objective = cur.F;
      best.plans = cur.plans;
      best.barycenter = q;
      best.plan = TransportPlan(cur.plans.front());
      best.stationarity_residual =
          std::max(outer_resid, cur.max_inner_residual);
    }
  }
  best.restarts_used = restarts;
  if (!any_converged) {
    throw ConvergenceError("oracle_rsbp: no restart reached the tolerance");
  }
  return best;
}

// ---------------------------------------------------------------------------
// Long-double transliteration paths.

namespace {

using ld = long double;
using LdMatrix = Eigen::Matrix<ld, Eigen::Dynamic, Eigen::Dynamic>;
using LdVector = Eigen::Matrix<ld, Eigen::Dynamic, 1>;

ld lse_row(const LdVector& z) {
  ld m = z.maxCoeff();
  ld acc = 0.0L;
  for (Eigen::Index i = 0; i < z.size(); ++i) acc += expl(z[i] - m);
  return m + logl(acc);
}

}  // namespace

double rsot_dual_reference(const CostMatrix& C, const DiscreteMeasure& a,
                           const DiscreteMeasure& b, double tau, double eta,
                           long max_iter) {
  const Eigen::Index n = C.size();
  LdMatrix Cl = C.entries().cast<ld>();
  LdVector la = a.weights().array().log().matrix().cast<ld>();
  LdVector lb = b.weights().array().log().matrix().cast<ld>();
  const ld et = eta;
  const ld tl = tau;
  LdVector u = LdVector::Zero(n), v = LdVector::Zero(n);
  LdVector scratch(n);
  for (long k = 0; k < max_iter; ++k) {
    ld change = 0.0L;
    if (k % 2 == 0) {
      for (Eigen::Index i = 0; i < n; ++i) {
        scratch[i] = lse_row((v - Cl.row(i).transpose()) / et);
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        ld lr = u[i] / et + scratch[i];
        ld nu = (et * tl / (et + tl)) * (u[i] / et + la[i] - lr);
        change = std::max(change, fabsl(nu - u[i]));
        u[i] = nu;
      }
    } else {
      for (Eigen::Index j = 0; j < n; ++j) {
        scratch[j] = lse_row((u - Cl.col(j)) / et);
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        ld lc = v[j] / et + scratch[j];
        ld nv = et * (v[j] / et + lb[j] - lc);
        change = std::max(change, fabsl(nv - v[j]));
        v[j] = nv;
      }
      if (change < 1e-12L) break;
    }
  }
  LdMatrix X(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      X(i, j) = expl((u[i] + v[j] - Cl(i, j)) / et);
    }
  }
  ld f = (Cl.array() * X.array()).sum();
  LdVector r = X.rowwise().sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (r[i] > 0.0L) f += tl * r[i] * logl(r[i] / expl(la[i]));
    f += tl * (expl(la[i]) - r[i]);
  }
  return static_cast<double>(f);
}

double rot_sinkhorn_reference(const CostMatrix& C, const DiscreteMeasure& a,
                              const DiscreteMeasure& b, double tau, double eta,
                              long max_iter) {
  const Eigen::Index n = C.size();
  LdMatrix Cl = C.entries().cast<ld>();
  LdVector la = a.weights().array().log().matrix().cast<ld>();
  LdVector lb = b.weights().array().log().matrix().cast<ld>();
  const ld et = eta;
  const ld tl = tau;
  const ld damp = et * tl / (et + tl);
  LdVector u = LdVector::Zero(n), v = LdVector::Zero(n);
  LdVector scratch(n);
  for (long k = 0; k < max_iter; ++k) {
    ld change = 0.0L;
    if (k % 2 == 0) {
      for (Eigen::Index i = 0; i < n; ++i) {
        scratch[i] = lse_row((v - Cl.row(i).transpose()) / et);
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        ld lr = u[i] / et + scratch[i];
        ld nu = damp * (u[i] / et + la[i] - lr);
        change = std::max(change, fabsl(nu - u[i]));
        u[i] = nu;
      }
    } else {
      for (Eigen::Index j = 0; j < n; ++j) {
        scratch[j] = lse_row((u - Cl.col(j)) / et);
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        ld lc = v[j] / et + scratch[j];
        ld nv = damp * (v[j] / et + lb[j] - lc);
        change = std::max(change, fabsl(nv - v[j]));
        v[j] = nv;
      }
      if (change < 1e-12L) break;
    }
  }
  LdMatrix X(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      X(i, j) = expl((u[i] + v[j] - Cl(i, j)) / et);
    }
  }
  X /= X.sum();
  ld f = (Cl.array() * X.array()).sum();
  LdVector r = X.rowwise().sum();
  LdVector c = X.colwise().sum().transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (r[i] > 0.0L) f += tl * r[i] * logl(r[i] / expl(la[i]));
    f += tl * (expl(la[i]) - r[i]);
    if (c[i] > 0.0L) f += tl * c[i] * logl(c[i] / expl(lb[i]));
    f += tl * (expl(lb[i]) - c[i]);
  }
  return static_cast<double>(f);
}

double rsbp_ibp_reference(const BarycenterProblem& problem, double tau,
                          double eta, long max_iter) {
  const int m = problem.m();
  const Eigen::Index n = problem.n();
  const ld et = eta;
  const ld tl = tau;
  const ld damp = et * tl / (et + tl);
  std::vector<LdMatrix> Cl(m);
  std::vector<LdVector> lp(m), u(m), v(m);
  LdVector w(m);
  for (int i = 0; i < m; ++i) {
    Cl[i] = problem.cost(i).entries().cast<ld>();
    lp[i] = problem.measure(i).weights().array().log().matrix().cast<ld>();
    u[i] = LdVector::Zero(n);
    v[i] = LdVector::Zero(n);
    w[i] = problem.weights()[i];
  }
  LdVector scratch(n), mean(n);
  std::vector<LdVector> col_scratch(m, LdVector(n));
  for (long k = 0; k < max_iter; ++k) {
    ld change = 0.0L;
    if (k % 2 == 0) {
      for (int i = 0; i < m; ++i) {
        for (Eigen::Index r = 0; r < n; ++r) {
          scratch[r] = lse_row((v[i] - Cl[i].row(r).transpose()) / et);
        }
        for (Eigen::Index r = 0; r < n; ++r) {
          ld lr = u[i][r] / et + scratch[r];
          ld nu = damp * (u[i][r] / et + lp[i][r] - lr);
          change = std::max(change, fabsl(nu - u[i][r]));
          u[i][r] = nu;
        }
      }
    } else {
      mean.setZero();
      for (int i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          ld lc = v[i][j] / et + lse_row((u[i] - Cl[i].col(j)) / et);
          col_scratch[i][j] = v[i][j] / et - lc;
        }
        mean += w[i] * col_scratch[i];
      }
      for (int i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          ld nv = et * (col_scratch[i][j] - mean[j]);
          change = std::max(change, fabsl(nv - v[i][j]));
          v[i][j] = nv;
        }
      }
      if (change < 1e-12L) break;
    }
  }
  ld f = 0.0L;
  for (int i = 0; i < m; ++i) {
    LdMatrix X(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index j = 0; j < n; ++j) {
        X(r, j) = expl((u[i][r] + v[i][j] - Cl[i](r, j)) / et);
      }
    }
    X /= X.sum();
    ld fi = (Cl[i].array() * X.array()).sum();
    LdVector r = X.rowwise().sum();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (r[t] > 0.0L) fi += tl * r[t] * logl(r[t] / expl(lp[i][t]));
      fi += tl * (expl(lp[i][t]) - r[t]);
    }
    f += w[i] * fi;
  }
  return static_cast<double>(f);
}

}  // namespace robust_ot
