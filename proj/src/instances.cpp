#include "robust_ot/instances.hpp"

#include "robust_ot/errors.hpp"
#include "robust_ot/io.hpp"

namespace robust_ot {

std::mt19937_64 rng_stream(const std::string& experiment, std::uint64_t seed,
                           std::uint64_t index) {
  std::string tag = experiment + "/" + std::to_string(seed) + "/" +
                    std::to_string(index);
  return std::mt19937_64(fnv1a(tag));
}

CostMatrix random_cost(Eigen::Index n, double lo, double hi,
                       std::mt19937_64& rng) {
  if (!(lo <= hi)) throw ConfigError("random_cost: lo > hi");
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix C(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) C(i, j) = dist(rng);
  }
  return CostMatrix(std::move(C));
}

Vector random_simplex(Eigen::Index n, double lo, double hi,
                      std::mt19937_64& rng) {
  if (!(0.0 < lo && lo <= hi)) {
    throw ConfigError("random_simplex: need 0 < lo <= hi");
  }
  std::uniform_real_distribution<double> dist(lo, hi);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v / v.sum();
}

}  // namespace robust_ot
