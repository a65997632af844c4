#pragma once

#include <string>
#include <vector>

#include "enki/baselines.hpp"
#include "enki/bounds.hpp"
#include "enki/correction.hpp"
#include "enki/error.hpp"
#include "enki/problems/setup.hpp"

namespace enki {

enum class Method { vanilla, mc1, mc2, chada, nesterov, anderson };
Method parse_method(const std::string& name);
std::string to_string(Method method);

enum class ProblemKind { deconv, lorenz96, heat2d };
std::string to_string(ProblemKind kind);

/// Full experiment description. Defaults follow the reference settings:
/// eps_delta = 1e-15, q = 0.99, mu = 0.01, alpha_bound = 10000,
/// max 10000 iterations, per-particle recompute interval 5, and a
/// convergence tolerance of 1e-5 for linear / 1e-4 for nonlinear problems
/// unless overridden.
struct ExperimentConfig {
  int schema_version = 1;
  ProblemKind problem = ProblemKind::deconv;
  DeconvParams deconv;
  Lorenz96Params lorenz;
  Heat2dParams heat;

  Method method = Method::vanilla;
  Eigen::Index ensemble_size = 0;  // 0: per-problem default (20 / 100 / 50)
  double mu = 0.01;
  double eps_c = 0.0;  // 0: per-problem default
  int max_iterations = 10000;
  double q = 0.99;
  double eps_delta = 1e-15;
  double alpha_bound = 1e4;
  int recompute_every = 5;
  int warmup_iterations = 10;
  double chada_beta = 0.8;
  bool use_fixed_point_alpha = false;
  bool record_fixed_point_alpha = false;
  std::uint64_t seed = 1;

  struct BoundBlock {
    std::vector<int> ensemble_sizes{5, 10, 15, 20, 25};
    int eps_count = 6;
    int trials = 10000;
    double eta = 0.99;
    bool corollary_mode = false;
  } bound;

  struct SampleSizeBlock {
    double eps = 1e-3;
    double p_target = 0.9;
    double c_m = 1.0;
  } sample_size;

  bool problem_is_linear() const { return problem == ProblemKind::deconv; }
  double resolved_eps_c() const;
  Eigen::Index resolved_ensemble_size() const;
  McRunConfig mc_config() const;
  void validate() const;  // throws ConfigError naming the offending field
};

/// Parses the JSON config; unknown keys and type mismatches raise
/// ConfigError with the field name.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);
/// Canonical JSON echo of a config; re-running from it reproduces the run.
std::string config_to_json(const ExperimentConfig& config);

InverseProblem build_problem(const ExperimentConfig& config);

/// Runs the configured method from a shared initial ensemble.
RunResult execute_method(const ExperimentConfig& config, Method method,
                         const InverseProblem& problem,
                         const Ensemble& initial);

struct RunSummary {
  std::string method;
  int iterations = 0;
  long long forward_evaluations = 0;
  double wall_seconds = 0.0;
  double final_loss = 0.0;
  double final_rel_error = 0.0;
  std::string stop_reason;
  std::uint64_t seed = 0;
};

struct RunArtifact {
  std::string history_csv_path;
  std::string summary_json_path;
  RunSummary summary;
};

/// Runs one experiment and writes history CSV plus summary JSON (with the
/// config echoed) under out_dir.
RunArtifact cmd_run(const ExperimentConfig& config, const std::string& out_dir);

struct CompareResult {
  std::vector<RunSummary> rows;
  std::string csv_path;      // deterministic columns only
  std::string summary_path;  // adds wall times
};

/// Runs several methods from one shared initial ensemble and writes the
/// comparison table. Wall times go to the JSON sidecar so the CSV stays
/// byte-reproducible.
CompareResult cmd_compare(const ExperimentConfig& config,
                          const std::vector<Method>& methods,
                          const std::string& out_dir);

struct BoundVerification {
  BoundGridResult grid;
  BoundConstants constants;
  bool dominance = false;
  double worst_margin = 0.0;  // max over cells of theoretical - (empirical + 1.96 SE)
  int worst_row = 0;
  int worst_col = 0;
  double eps_max = 0.0;
  std::string csv_path;
  std::string summary_path;
};

/// Monte-Carlo verification of the non-asymptotic bound on the linear
/// problem: simulates error samples per ensemble size, fits (c, c1, c2) at
/// the anchor accuracy, then checks theoretical <= empirical + 1.96 SE on
/// the whole grid.
BoundVerification cmd_verify_bound(const ExperimentConfig& config,
                                   const std::string& out_dir);

struct SampleSizeReport {
  SampleSizePlan plan;
  double eps = 0.0;
  double p_target = 0.0;
  double c_m = 0.0;
  double achieved_probability = 0.0;
  std::string json_path;
};

/// Smallest ensemble size for the requested confidence, with the per-term
/// breakdown; the achieved probability is evaluated at c1 = c_m, c2 = 1/c_m.
SampleSizeReport cmd_sample_size(const ExperimentConfig& config,
                                 const std::string& out_dir);

}  // namespace enki
