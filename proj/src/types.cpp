#include "robust_ot/types.hpp"

#include <cmath>

namespace robust_ot {

DiscreteMeasure::DiscreteMeasure(Vector weights, bool smooth_zeros)
    : weights_(std::move(weights)) {
  if (weights_.size() == 0) {
    throw ShapeError("DiscreteMeasure: empty weight vector");
  }
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (!std::isfinite(weights_[i]) || weights_[i] < 0.0) {
      throw NonPositiveWeightError(
          "DiscreteMeasure: weight " + std::to_string(i) +
          " is negative or non-finite");
    }
  }
  if (smooth_zeros) {
    double original_mass = weights_.sum();
    if (original_mass <= 0.0) {
      throw NonPositiveWeightError("DiscreteMeasure: zero total mass");
    }
    weights_.array() += kSmoothingDelta;
    weights_ *= original_mass / weights_.sum();
  }
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (weights_[i] <= 0.0) {
      throw NonPositiveWeightError(
          "DiscreteMeasure: weight " + std::to_string(i) +
          " is zero; pass smooth_zeros=true to opt into uniform smoothing");
    }
  }
  mass_ = weights_.sum();
  log_weights_ = weights_.array().log();
}

CostMatrix::CostMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
    throw ShapeError("CostMatrix: entries must be square and nonempty");
  }
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    for (Eigen::Index j = 0; j < entries_.cols(); ++j) {
      if (!std::isfinite(entries_(i, j)) || entries_(i, j) < 0.0) {
        throw ConfigError("CostMatrix: entries must be finite and >= 0");
      }
    }
  }
  max_entry_ = entries_.maxCoeff();
}

TransportPlan::TransportPlan(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
    throw ShapeError("TransportPlan: entries must be square and nonempty");
  }
  if (!entries_.allFinite() || entries_.minCoeff() < 0.0) {
    throw ConfigError("TransportPlan: entries must be finite and >= 0");
  }
  row_marginal_ = entries_.rowwise().sum();
  col_marginal_ = entries_.colwise().sum().transpose();
  mass_ = row_marginal_.sum();
}

void SolverConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("SolverConfig: tau must be positive");
  if (max_iter <= 0) throw ConfigError("SolverConfig: max_iter must be positive");
  if (schedule == ScheduleMode::TheoremSchedule) {
    if (!epsilon.has_value()) {
      throw ConfigError("SolverConfig: TheoremSchedule needs epsilon");
    }
    if (eta.has_value()) {
      throw ConfigError(
          "SolverConfig: eta is derived under TheoremSchedule; do not set it");
    }
    if (!(*epsilon > 0.0)) {
      throw ConfigError("SolverConfig: epsilon must be positive");
    }
  } else {
    if (!eta.has_value() || !(*eta > 0.0)) {
      throw ConfigError("SolverConfig: Manual schedule needs a positive eta");
    }
  }
  if (stop == StopRule::DualResidual && !(stop_tol > 0.0)) {
    throw ConfigError("SolverConfig: DualResidual stop needs a positive tol");
  }
}

}  // namespace robust_ot
