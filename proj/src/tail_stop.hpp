#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace robust_ot::detail {

// Early-stop rule driven by the observed geometric decay of per-round
// potential changes. The contraction ratio is estimated as the largest
// change ratio over a trailing window; the remaining movement of the
// potentials is then bounded by the geometric tail change * rho / (1 - rho).
// Stops only after the tail bound holds on several consecutive rounds, so a
// single lucky round cannot end the run.
struct TailStop {
  static constexpr int kWindow = 8;
  static constexpr int kConsecutive = 3;
  static constexpr int kMinRounds = 16;

  double ratios[kWindow] = {};
  double prev_change = -1.0;
  int rounds = 0;
  int filled = 0;
  int hits = 0;

  bool done(double change, double tol) {
    ++rounds;
    if (change == 0.0) return true;
    if (prev_change > 0.0) {
      ratios[rounds % kWindow] = change / prev_change;
      filled = std::min(filled + 1, kWindow);
    }
    prev_change = change;
    if (rounds < kMinRounds || filled < kWindow) return false;
    double rho = *std::max_element(ratios, ratios + kWindow);
    if (!(rho > 0.0) || rho >= 1.0) {
      hits = 0;
      return false;
    }
    double tail = change * rho / (1.0 - rho);
    hits = tail <= tol ? hits + 1 : 0;
    return hits >= kConsecutive;
  }
};

// Aitken-style stop on objective values recorded at a fixed stride. With
// geometric decay of the per-stride drops d2 -> d1, the remaining decrease is
// bounded by d1 * rho / (1 - rho). A plateau counts only when the whole
// trailing window of recorded values is flat far below the tolerance, so a
// short mid-run stall between two descent phases does not end the run.
template <class TracePointT>
struct ObjectiveTail {
  static constexpr int kConsecutive = 3;
  static constexpr int kWindow = 8;
  int hits = 0;

  bool done(const std::vector<TracePointT>& tr, double tol) {
    if (tr.size() < static_cast<std::size_t>(kWindow)) return false;
    double f2 = tr[tr.size() - 3].f_value;
    double f1 = tr[tr.size() - 2].f_value;
    double f0 = tr.back().f_value;
    double d2 = f2 - f1, d1 = f1 - f0;
    bool hit = false;
    if (d1 > 0.0 && d2 > d1) {
      double rho = d1 / d2;
      hit = d1 * rho / (1.0 - rho) <= tol;
    } else {
      double lo = f0, hi = f0;
      for (std::size_t i = tr.size() - kWindow; i < tr.size(); ++i) {
        lo = std::min(lo, tr[i].f_value);
        hi = std::max(hi, tr[i].f_value);
      }
      hit = (hi - lo) <= 1e-3 * tol;
    }
    hits = hit ? hits + 1 : 0;
    return hits >= kConsecutive;
  }
};

}  // namespace robust_ot::detail
