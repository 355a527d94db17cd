#ifndef ROBUST_OT_CLI_HPP_
#define ROBUST_OT_CLI_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "robust_ot/types.hpp"

// Command surface of the experiment harness. The pieces are exposed as plain
// functions so tests can drive them without spawning processes; run_cli wires
// them to argument parsing and maps exceptions to exit codes:
// 0 success, 2 parse, 3 shape, 4 non-convergence, 5 configuration.

namespace robust_ot::cli {

inline constexpr const char* kVersion = "0.1.0";

struct GlobalFlags {
  double tau = 1.0;
  std::optional<double> epsilon;  // mutually exclusive with eta
  std::optional<double> eta;
  std::int64_t max_iter = 20'000'000;
  std::string stop = "theorem";  // "theorem" (fixed count) or "residual"
  double tol = 1e-9;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
  std::string timestamp;      // empty: now (or epoch when deterministic)
  bool deterministic = false; // zero wall times for bit-identical reports
  bool smooth_zeros = false;
};

SolverConfig make_config(const GlobalFlags& flags);

nlohmann::ordered_json make_manifest(
    const std::string& command, const GlobalFlags& flags,
    const std::vector<std::pair<std::string, std::string>>& input_files);

nlohmann::ordered_json report_json(const SolveReport& report,
                                   double objective,
                                   bool include_wall_time);

// kind: rsot | rot | uot | barycenter.
int cmd_solve(const std::string& kind,
              const std::vector<std::string>& cost_files,
              const std::string& a_file, const std::string& b_file,
              const std::vector<std::string>& measure_files,
              const std::string& weights_file, const std::string& plan_out,
              const GlobalFlags& flags);

struct BenchRow {
  std::string kind;
  Eigen::Index n = 0;
  double tau = 0.0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::int64_t k_theory = 0;
  std::int64_t k_emp = 0;
  std::optional<double> ratio;  // k_theory / k_emp; absent when k_emp = 0
};

// One row per (epsilon, seed) pair; rows are ordered by (epsilon desc, seed)
// regardless of thread count. kind: rsot | rot | barycenter.
std::vector<BenchRow> bench_iters(const std::string& kind, Eigen::Index n,
                                  int m, double tau,
                                  const std::vector<double>& epsilons,
                                  int num_seeds, std::uint64_t base_seed,
                                  int threads, bool use_oracle);

int cmd_bench_iters(const std::string& kind, Eigen::Index n, int m,
                    const std::vector<double>& epsilons, int num_seeds,
                    bool no_oracle, const GlobalFlags& flags);

int cmd_compare_marginals(const std::string& a_file, const std::string& b_file,
                          const GlobalFlags& flags);

int cmd_contraction(int m, Eigen::Index n, int trials, std::int64_t iters,
                    const GlobalFlags& flags);

int run_cli(int argc, const char* const* argv);

}  // namespace robust_ot::cli

#endif  // ROBUST_OT_CLI_HPP_
