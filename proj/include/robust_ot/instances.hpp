#ifndef ROBUST_OT_INSTANCES_HPP_
#define ROBUST_OT_INSTANCES_HPP_

#include <cstdint>
#include <random>
#include <string>

#include "robust_ot/types.hpp"

namespace robust_ot {

// Named RNG streams: the generator for a given (experiment, seed, index)
// triple is fully determined by those values, so sweeps reproduce across
// machines and sweep points are independent of evaluation order.
std::mt19937_64 rng_stream(const std::string& experiment, std::uint64_t seed,
                           std::uint64_t index);

// n x n cost with entries drawn uniformly from [lo, hi].
CostMatrix random_cost(Eigen::Index n, double lo, double hi,
                       std::mt19937_64& rng);

// Probability vector: entries drawn uniformly from [lo, hi], then normalized.
Vector random_simplex(Eigen::Index n, double lo, double hi,
                      std::mt19937_64& rng);

}  // namespace robust_ot

#endif  // ROBUST_OT_INSTANCES_HPP_
