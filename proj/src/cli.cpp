#include "robust_ot/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "robust_ot/barycenter.hpp"
#include "robust_ot/errors.hpp"
#include "robust_ot/instances.hpp"
#include "robust_ot/io.hpp"
#include "robust_ot/oracle.hpp"
#include "robust_ot/rot.hpp"
#include "robust_ot/rsot.hpp"

namespace robust_ot::cli {

namespace {

using nlohmann::ordered_json;

std::string now_utc_iso8601() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

DiscreteMeasure load_measure(const std::string& path, bool smooth_zeros) {
  return DiscreteMeasure(read_vector_csv(path), smooth_zeros);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << text;
}

void write_manifest_sidecar(const ordered_json& manifest,
                            const std::string& out_path) {
  write_text(out_path + ".manifest.json", manifest.dump(2) + "\n");
}

// Smallest recorded iteration from which every later recorded objective stays
// within epsilon of the final (long-run) value. 0 when already satisfied at
// the start; the horizon is the residual-stopped run itself.
// Geometric extrapolation of the recorded objective tail; falls back to the
// last recorded value when the trailing drops are not decreasing.
double aitken_limit(const std::vector<TracePoint>& tr) {
  if (tr.empty()) return 0.0;
  double f0 = tr.back().f_value;
  if (tr.size() < 3) return f0;
  double f2 = tr[tr.size() - 3].f_value;
  double f1 = tr[tr.size() - 2].f_value;
  double d2 = f2 - f1, d1 = f1 - f0;
  if (d1 > 0.0 && d2 > d1) {
    double rho = d1 / d2;
    return f0 - d1 * rho / (1.0 - rho);
  }
  return f0;
}

std::int64_t empirical_k(const std::vector<TracePoint>& trace, double epsilon,
                         std::optional<double> f_ref_override = {}) {
  if (trace.empty()) return 0;
  double f_ref = f_ref_override ? *f_ref_override : trace.back().f_value;
  std::int64_t k = trace.back().iteration;
  for (auto it = trace.rbegin(); it != trace.rend(); ++it) {
    if (it->f_value - f_ref > epsilon) break;
    k = it->iteration;
  }
  return k;
}

int run_threads(int threads, int jobs, const std::function<void(int)>& work) {
  threads = std::max(1, std::min(threads, jobs));
  if (threads == 1) {
    for (int j = 0; j < jobs; ++j) work(j);
    return threads;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int j = next.fetch_add(1); j < jobs; j = next.fetch_add(1)) {
        work(j);
      }
    });
  }
  for (auto& th : pool) th.join();
  return threads;
}

}  // namespace

SolverConfig make_config(const GlobalFlags& flags) {
  if (flags.epsilon && flags.eta) {
    throw ConfigError("--epsilon and --eta are mutually exclusive");
  }
  SolverConfig config;
  config.tau = flags.tau;
  config.epsilon = flags.epsilon;
  config.eta = flags.eta;
  config.max_iter = flags.max_iter;
  if (flags.eta) {
    config.schedule = ScheduleMode::Manual;
  } else if (flags.epsilon) {
    config.schedule = ScheduleMode::TheoremSchedule;
  } else {
    throw ConfigError("one of --epsilon or --eta is required");
  }
  if (flags.stop == "residual") {
    config.stop = StopRule::DualResidual;
    config.stop_tol = flags.tol;
  } else if (flags.stop == "tail") {
    config.stop = StopRule::EmpiricalTail;
    config.stop_tol = flags.tol;
  } else if (flags.stop == "ftail") {
    config.stop = StopRule::ObjectiveTail;
    config.stop_tol = flags.tol;
  } else if (flags.stop == "gap") {
    config.stop = StopRule::DualityGap;
    config.stop_tol = flags.tol;
  } else if (flags.stop == "theorem") {
    config.stop = StopRule::FixedIterations;
  } else {
    throw ConfigError(
        "--stop must be 'theorem', 'residual', 'tail', 'ftail', or 'gap'");
  }
  config.validate();
  return config;
}

ordered_json make_manifest(
    const std::string& command, const GlobalFlags& flags,
    const std::vector<std::pair<std::string, std::string>>& input_files) {
  ordered_json config;
  config["tau"] = flags.tau;
  if (flags.epsilon) config["epsilon"] = *flags.epsilon;
  if (flags.eta) config["eta"] = *flags.eta;
  config["max_iter"] = flags.max_iter;
  config["stop"] = flags.stop;
  config["tol"] = flags.tol;
  config["threads"] = flags.threads;
  config["deterministic"] = flags.deterministic;
  config["smooth_zeros"] = flags.smooth_zeros;

  ordered_json inputs;
  for (const auto& [role, path] : input_files) {
    inputs[role] = "fnv1a:" + std::to_string(hash_file(path));
  }
  std::string timestamp = flags.timestamp;
  if (timestamp.empty()) {
    timestamp = flags.deterministic ? "1970-01-01T00:00:00Z" : now_utc_iso8601();
  }
  ordered_json manifest;
  manifest["command"] = command;
  manifest["seed"] = flags.seed;
  manifest["config"] = std::move(config);
  manifest["inputs"] = std::move(inputs);
  manifest["version"] = kVersion;
  manifest["timestamp"] = timestamp;
  return manifest;
}

ordered_json report_json(const SolveReport& report, double objective,
                         bool include_wall_time) {
  ordered_json schedule;
  schedule["U"] = report.U;
  schedule["eta"] = report.eta;
  schedule["epsilon"] = report.epsilon;
  schedule["tau"] = report.tau;
  schedule["R_bound"] = report.R_bound;
  schedule["k1"] = report.k1;
  schedule["k2"] = report.k2;
  schedule["k_required"] = report.k_required;
  schedule["guarantee_valid"] = report.guarantee_valid;
  schedule["guarantee_note"] = report.guarantee_note;

  ordered_json results;
  results["objective"] = objective;
  results["iterations_run"] = report.iterations_run;
  results["marginal_residual"] = report.marginal_residual;
  if (report.raw_mass) results["raw_mass"] = *report.raw_mass;
  if (report.nystrom_rank) results["nystrom_rank"] = *report.nystrom_rank;
  if (report.clamp_count) results["clamp_count"] = *report.clamp_count;
  results["dense_fallback"] = report.dense_fallback;
  results["wall_time_seconds"] =
      include_wall_time ? report.wall_time_seconds : 0.0;

  ordered_json trace = ordered_json::array();
  for (const auto& p : report.objective_trace) {
    trace.push_back({p.iteration, p.f_value, p.g_value});
  }
  ordered_json dual = ordered_json::array();
  for (const auto& p : report.dual_trace) {
    dual.push_back({p.iteration, p.h_value});
  }

  ordered_json out;
  out["schedule"] = std::move(schedule);
  out["results"] = std::move(results);
  out["objective_trace"] = std::move(trace);
  out["dual_trace"] = std::move(dual);
  return out;
}

int cmd_solve(const std::string& kind,
              const std::vector<std::string>& cost_files,
              const std::string& a_file, const std::string& b_file,
              const std::vector<std::string>& measure_files,
              const std::string& weights_file, const std::string& plan_out,
              const GlobalFlags& flags) {
  SolverConfig config = make_config(flags);
  if (flags.out.empty()) throw ConfigError("--out is required");

  ordered_json body;
  std::vector<std::pair<std::string, std::string>> inputs;

  if (kind == "barycenter") {
    if (cost_files.empty() || cost_files.size() != measure_files.size()) {
      throw ConfigError(
          "barycenter needs matching --cost and --measure file lists");
    }
    std::vector<CostMatrix> costs;
    std::vector<DiscreteMeasure> measures;
    for (std::size_t i = 0; i < cost_files.size(); ++i) {
      inputs.emplace_back("cost_" + std::to_string(i), cost_files[i]);
      inputs.emplace_back("measure_" + std::to_string(i), measure_files[i]);
      costs.emplace_back(read_matrix_csv(cost_files[i]));
      measures.emplace_back(load_measure(measure_files[i], flags.smooth_zeros));
    }
    Vector w;
    if (weights_file.empty()) {
      w = Vector::Constant(static_cast<Eigen::Index>(costs.size()),
                           1.0 / static_cast<double>(costs.size()));
    } else {
      inputs.emplace_back("weights", weights_file);
      w = read_vector_csv(weights_file);
    }
    BarycenterProblem problem(std::move(costs), std::move(measures),
                              std::move(w));
    RsbpSolution sol = solve_rsbp(problem, config);
    double f = rsbp_objective(sol.normalized_plans, problem, flags.tau);
    body = report_json(sol.report, f, !flags.deterministic);
    ordered_json bary = ordered_json::array();
    for (Eigen::Index i = 0; i < sol.barycenter.size(); ++i) {
      bary.push_back(sol.barycenter.weights()[i]);
    }
    body["barycenter"] = std::move(bary);
    body["marginal_spread"] = sol.marginal_spread;
    if (!plan_out.empty()) {
      write_matrix_csv(plan_out, sol.normalized_plans.front().entries());
    }
  } else if (kind == "rsot" || kind == "rot" || kind == "uot") {
    if (cost_files.size() != 1 || a_file.empty() || b_file.empty()) {
      throw ConfigError(kind + " needs --cost, --a and --b");
    }
    inputs.emplace_back("cost", cost_files.front());
    inputs.emplace_back("a", a_file);
    inputs.emplace_back("b", b_file);
    CostMatrix C(read_matrix_csv(cost_files.front()));
    DiscreteMeasure a = load_measure(a_file, flags.smooth_zeros);
    DiscreteMeasure b = load_measure(b_file, flags.smooth_zeros);
    if (a.size() != C.size() || b.size() != C.size()) {
      throw ShapeError("measure length does not match " + cost_files.front());
    }
    TransportPlan plan;
    SolveReport report;
    double f = 0.0;
    if (kind == "rsot") {
      auto sol = solve_rsot(C, a, b, config);
      f = objective_rsot(sol.plan, C, a, flags.tau);
      plan = std::move(sol.plan);
      report = std::move(sol.report);
    } else if (kind == "rot") {
      auto sol = solve_rot(C, a, b, config);
      f = objective_rot(sol.plan, C, a, b, flags.tau);
      plan = std::move(sol.plan);
      report = std::move(sol.report);
    } else {
      auto sol = solve_uot(C, a, b, config);
      f = objective_uot(sol.plan, C, a, b, flags.tau);
      plan = std::move(sol.plan);
      report = std::move(sol.report);
    }
    body = report_json(report, f, !flags.deterministic);
    if (!plan_out.empty()) write_matrix_csv(plan_out, plan.entries());
  } else {
    throw ConfigError("unknown solve kind: " + kind);
  }

  ordered_json doc;
  doc["manifest"] = make_manifest("solve " + kind, flags, inputs);
  doc["report"] = std::move(body);
  write_text(flags.out, doc.dump(2) + "\n");
  return 0;
}

namespace {

BenchRow bench_point(const std::string& kind, Eigen::Index n, int m,
                     double tau, double epsilon, std::uint64_t seed,
                     bool use_oracle) {
  BenchRow row;
  row.kind = kind;
  row.n = n;
  row.tau = tau;
  row.epsilon = epsilon;
  row.seed = seed;

  SolverConfig config;
  config.tau = tau;
  config.epsilon = epsilon;
  config.schedule = ScheduleMode::TheoremSchedule;
  config.stop = StopRule::ObjectiveTail;
  config.max_iter = 200'000'000;

  std::mt19937_64 rng = rng_stream("bench-iters/" + kind, seed, 0);
  if (kind == "rsot" || kind == "rot") {
    CostMatrix C = random_cost(n, 1.0, 50.0, rng);
    DiscreteMeasure a(random_simplex(n, 0.1, 1.0, rng));
    DiscreteMeasure b(random_simplex(n, 0.1, 1.0, rng));
    SolveReport report;
    std::optional<double> f_ref;
    if (kind == "rsot") {
      RsotSchedule s = rsot_schedule(n, epsilon, tau, C, a, b);
      row.k_theory = s.k_required;
      // The run stops once the extrapolated objective tail is well below
      // epsilon; the long-run reference is the extrapolated limit.
      config.stop_tol = epsilon / 8.0;
      report = solve_rsot(C, a, b, config).report;
      if (use_oracle) f_ref = oracle_rsot(C, a, b, tau, 1e-7, seed).objective;
      else f_ref = aitken_limit(report.objective_trace);
    } else {
      RotSchedule s = rot_schedule(n, epsilon, tau, C, a, b);
      row.k_theory = s.k_required;
      config.stop_tol = epsilon / 8.0;
      report = solve_rot(C, a, b, config).report;
      if (use_oracle) f_ref = oracle_rot(C, a, b, tau, 1e-7, seed).objective;
      else f_ref = aitken_limit(report.objective_trace);
    }
    row.k_emp = empirical_k(report.objective_trace, epsilon, f_ref);
  } else if (kind == "barycenter") {
    std::vector<CostMatrix> costs;
    std::vector<DiscreteMeasure> measures;
    for (int i = 0; i < m; ++i) {
      costs.push_back(random_cost(n, 0.01, 0.1, rng));
    }
    for (int i = 0; i < m; ++i) {
      measures.emplace_back(random_simplex(n, 0.1, 1.0, rng));
    }
    Vector w = random_simplex(m, 0.1, 1.0, rng);
    BarycenterProblem problem(std::move(costs), std::move(measures),
                              std::move(w));
    RsbpSchedule s = rsbp_schedule(problem, epsilon, tau);
    row.k_theory = s.k_required;
    config.stop_tol = epsilon / 8.0;
    SolveReport report = solve_rsbp(problem, config).report;
    std::optional<double> f_ref;
    if (use_oracle) f_ref = oracle_rsbp(problem, tau, 1e-7, seed).objective;
    else f_ref = aitken_limit(report.objective_trace);
    row.k_emp = empirical_k(report.objective_trace, epsilon, f_ref);
  } else {
    throw ConfigError("unknown bench kind: " + kind);
  }
  if (row.k_emp > 0) {
    row.ratio = static_cast<double>(row.k_theory) /
                static_cast<double>(row.k_emp);
  }
  return row;
}

}  // namespace

std::vector<BenchRow> bench_iters(const std::string& kind, Eigen::Index n,
                                  int m, double tau,
                                  const std::vector<double>& epsilons,
                                  int num_seeds, std::uint64_t base_seed,
                                  int threads, bool use_oracle) {
  std::vector<double> eps_sorted = epsilons;
  std::sort(eps_sorted.begin(), eps_sorted.end(), std::greater<double>());
  const int jobs = static_cast<int>(eps_sorted.size()) * num_seeds;
  std::vector<BenchRow> rows(jobs);
  run_threads(threads, jobs, [&](int j) {
    int ei = j / num_seeds;
    int si = j % num_seeds;
    rows[j] = bench_point(kind, n, m, tau, eps_sorted[ei],
                          base_seed + static_cast<std::uint64_t>(si),
                          use_oracle);
  });
  return rows;
}

int cmd_bench_iters(const std::string& kind, Eigen::Index n, int m,
                    const std::vector<double>& epsilons, int num_seeds,
                    bool no_oracle, const GlobalFlags& flags) {
  if (flags.out.empty()) throw ConfigError("--out is required");
  if (epsilons.empty() || num_seeds < 1) {
    throw ConfigError("bench-iters needs at least one epsilon and one seed");
  }
  // Small problems get an independent reference optimum; larger ones fall
  // back to the long-run value of the stopped trace.
  bool use_oracle = !no_oracle && n <= 12;
  auto rows = bench_iters(kind, n, m, flags.tau, epsilons, num_seeds,
                          flags.seed, flags.threads, use_oracle);
  std::string csv = "kind,n,tau,epsilon,seed,k_theory,k_emp,ratio\n";
  for (const auto& r : rows) {
    csv += r.kind + "," + std::to_string(r.n) + "," + format_double(r.tau) +
           "," + format_double(r.epsilon) + "," + std::to_string(r.seed) +
           "," + std::to_string(r.k_theory) + "," + std::to_string(r.k_emp) +
           "," + (r.ratio ? format_double(*r.ratio) : std::string()) + "\n";
  }
  write_text(flags.out, csv);
  write_manifest_sidecar(make_manifest("bench-iters " + kind, flags, {}),
                         flags.out);
  return 0;
}

int cmd_compare_marginals(const std::string& a_file, const std::string& b_file,
                          const GlobalFlags& flags) {
  if (flags.out.empty()) throw ConfigError("--out is required");
  if (!flags.eta) {
    throw ConfigError("compare-marginals requires an explicit --eta");
  }
  Vector a_raw = read_vector_csv(a_file);
  Vector b_raw = read_vector_csv(b_file);
  if (a_raw.size() != b_raw.size()) {
    throw ShapeError("histogram lengths differ between " + a_file + " and " +
                     b_file);
  }
  const Eigen::Index n = a_raw.size();
  if (n < 2) throw ShapeError("histograms need at least two bins");
  DiscreteMeasure a(a_raw, flags.smooth_zeros);
  DiscreteMeasure b(b_raw, flags.smooth_zeros);

  // Squared-distance cost on the uniform grid over [0, 1].
  Matrix C(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double d = static_cast<double>(i - j) / static_cast<double>(n - 1);
      C(i, j) = d * d;
    }
  }
  CostMatrix cost(std::move(C));

  SolverConfig config = make_config(flags);
  auto rot = solve_rot(cost, a, b, config);
  auto rsot = solve_rsot(cost, a, b, config);
  auto uot = solve_uot(cost, a, b, config);

  std::string csv = "a,b,a_rot,b_rot,a_rsot,a_uot,b_uot\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    csv += format_double(a.weights()[i]) + "," +
           format_double(b.weights()[i]) + "," +
           format_double(rot.plan.row_marginal()[i]) + "," +
           format_double(rot.plan.col_marginal()[i]) + "," +
           format_double(rsot.plan.row_marginal()[i]) + "," +
           format_double(uot.plan.row_marginal()[i]) + "," +
           format_double(uot.plan.col_marginal()[i]) + "\n";
  }
  write_text(flags.out, csv);
  write_manifest_sidecar(
      make_manifest("compare-marginals", flags,
                    {{"a", a_file}, {"b", b_file}}),
      flags.out);
  return 0;
}

int cmd_contraction(int m, Eigen::Index n, int trials, std::int64_t iters,
                    const GlobalFlags& flags) {
  if (flags.out.empty()) throw ConfigError("--out is required");
  if (trials < 1) throw ConfigError("--trials must be >= 1");
  if (!flags.eta) throw ConfigError("contraction requires an explicit --eta");
  const double eta = *flags.eta;
  const double tau = flags.tau;

  std::string csv = "trial,k,R_uv,R_uu\n";
  for (int trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng =
        rng_stream("contraction", flags.seed, static_cast<std::uint64_t>(trial));
    std::vector<CostMatrix> costs;
    std::vector<DiscreteMeasure> measures;
    for (int i = 0; i < m; ++i) costs.push_back(random_cost(n, 0.01, 1.0, rng));
    for (int i = 0; i < m; ++i) {
      measures.emplace_back(random_simplex(n, 0.1, 1.0, rng));
    }
    Vector w = random_simplex(m, 0.1, 1.0, rng);
    BarycenterProblem problem(std::move(costs), std::move(measures),
                              std::move(w));

    std::vector<PotentialFamily> trace;
    PotentialFamily state = PotentialFamily::zeros(m, n);
    trace.push_back(state);
    for (std::int64_t k = 0; k < iters; ++k) {
      state = robust_ibp_step(state, k, problem, eta, tau);
      trace.push_back(state);
    }
    PotentialFamily reference = state;
    for (std::int64_t k = iters; k < 10 * iters; ++k) {
      reference = robust_ibp_step(reference, k, problem, eta, tau);
    }
    ContractionRatios ratios = contraction_diagnostics(trace, reference);
    for (std::size_t i = 0; i < ratios.k.size(); ++i) {
      csv += std::to_string(trial) + "," + std::to_string(ratios.k[i]) + "," +
             format_double(ratios.R_uv[i]) + "," +
             format_double(ratios.R_uu[i]) + "\n";
    }
  }
  write_text(flags.out, csv);
  write_manifest_sidecar(make_manifest("contraction", flags, {}), flags.out);
  return 0;
}

namespace {

void add_global_flags(CLI::App* app, GlobalFlags& flags) {
  app->add_option("--tau", flags.tau, "Marginal relaxation strength");
  auto* eps = app->add_option("--epsilon", flags.epsilon,
                              "Target accuracy (derives eta and k_required)");
  auto* eta = app->add_option("--eta", flags.eta,
                              "Explicit entropic regularization (manual mode)");
  eps->excludes(eta);
  eta->excludes(eps);
  app->add_option("--max-iter", flags.max_iter, "Iteration cap");
  app->add_option("--stop", flags.stop,
                  "Stopping rule: 'theorem' (fixed count), 'residual', "
                  "'tail' (potential tail), 'ftail' (objective tail), or "
                  "'gap' (duality gap, semi-constrained only)")
      ->check(CLI::IsMember({"theorem", "residual", "tail", "ftail", "gap"}));
  app->add_option("--tol", flags.tol, "Residual stopping tolerance");
  app->add_option("--seed", flags.seed, "Base RNG seed");
  app->add_option("--threads", flags.threads,
                  "Worker threads for sweeps (env: ROBUST_OT_THREADS)")
      ->envname("ROBUST_OT_THREADS");
  app->add_option("--out", flags.out, "Output file");
  app->add_option("--timestamp", flags.timestamp,
                  "Fixed manifest timestamp (for reproducible reports)");
  app->add_flag("--deterministic", flags.deterministic,
                "Zero wall-clock fields so identical runs are bit-identical");
  app->add_flag("--smooth-zeros", flags.smooth_zeros,
                "Replace zero weights by 1e-9 and renormalize");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Robust optimal transport solvers and experiment harness"};
  app.require_subcommand(1);

  GlobalFlags flags;
  std::string solve_kind;
  std::vector<std::string> cost_files, measure_files;
  std::string a_file, b_file, weights_file, plan_out;

  auto* solve = app.add_subcommand("solve", "Run one solver on CSV inputs");
  solve->add_option("kind", solve_kind, "rsot | rot | uot | barycenter")
      ->required()
      ->check(CLI::IsMember({"rsot", "rot", "uot", "barycenter"}));
  solve->add_option("--cost", cost_files, "Cost matrix CSV (repeatable)");
  solve->add_option("--a", a_file, "First measure CSV");
  solve->add_option("--b", b_file, "Second measure CSV");
  solve->add_option("--measure", measure_files,
                    "Barycenter input measure CSV (repeatable)");
  solve->add_option("--weights", weights_file, "Barycenter weights CSV");
  solve->add_option("--plan-out", plan_out, "Optional plan dump CSV");
  add_global_flags(solve, flags);

  std::string bench_kind = "rsot";
  Eigen::Index bench_n = 100;
  int bench_m = 2;
  std::vector<double> bench_epsilons;
  int bench_seeds = 10;
  auto* bench = app.add_subcommand(
      "bench-iters", "Theoretical vs empirical iteration counts");
  bench->add_option("--kind", bench_kind, "rsot | rot | barycenter")
      ->check(CLI::IsMember({"rsot", "rot", "barycenter"}));
  bench->add_option("--n", bench_n, "Problem size");
  bench->add_option("--m", bench_m, "Number of barycenter measures");
  bench->add_option("--epsilons", bench_epsilons, "Accuracy sweep")
      ->required();
  bench->add_option("--seeds", bench_seeds, "Number of seeds per epsilon");
  bool bench_no_oracle = false;
  bench->add_flag("--no-oracle", bench_no_oracle,
                  "Skip the reference optimum even on small problems");
  add_global_flags(bench, flags);

  std::string cm_a, cm_b;
  auto* cm = app.add_subcommand(
      "compare-marginals", "Marginals of each method on two 1-D histograms");
  cm->add_option("--a", cm_a, "First histogram CSV")->required();
  cm->add_option("--b", cm_b, "Second histogram CSV")->required();
  add_global_flags(cm, flags);

  int ct_m = 2;
  Eigen::Index ct_n = 10;
  int ct_trials = 5;
  std::int64_t ct_iters = 50;
  auto* ct = app.add_subcommand("contraction",
                                "Dual convergence ratio diagnostics");
  ct->add_option("--m", ct_m, "Number of measures");
  ct->add_option("--n", ct_n, "Problem size");
  ct->add_option("--trials", ct_trials, "Independent trials");
  ct->add_option("--iters", ct_iters, "Recorded iterations per trial");
  add_global_flags(ct, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 5;
  }

  try {
    if (solve->parsed()) {
      return cmd_solve(solve_kind, cost_files, a_file, b_file, measure_files,
                       weights_file, plan_out, flags);
    }
    if (bench->parsed()) {
      return cmd_bench_iters(bench_kind, bench_n, bench_m, bench_epsilons,
                             bench_seeds, bench_no_oracle, flags);
    }
    if (cm->parsed()) return cmd_compare_marginals(cm_a, cm_b, flags);
    if (ct->parsed()) return cmd_contraction(ct_m, ct_n, ct_trials, ct_iters,
                                             flags);
    throw ConfigError("no subcommand given");
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return 3;
  } catch (const ConvergenceError& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    return 4;
  } catch (const NonPositiveWeightError& e) {
    std::cerr << "configuration error: " << e.what()
              << " (consider --smooth-zeros)\n";
    return 5;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 5;
  }
}

}  // namespace robust_ot::cli
