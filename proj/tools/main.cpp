#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "enki/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_path, "JSON experiment config")
      ->required();
  cmd->add_option("--out", args->out_dir, "output directory");
  cmd->add_option("--seed", args->seed, "override the config seed")
      ->each([args](const std::string&) { args->seed_set = true; });
}

enki::ExperimentConfig load(const CommonArgs& args) {
  enki::ExperimentConfig config = enki::load_experiment_config(args.config_path);
  if (args.seed_set) config.seed = args.seed;
  return config;
}

void print_summary(const enki::RunSummary& s) {
  std::printf("%-10s iterations=%d evaluations=%lld final_loss=%.6g "
              "rel_error=%.6g stop=%s\n",
              s.method.c_str(), s.iterations, s.forward_evaluations,
              s.final_loss, s.final_rel_error, s.stop_reason.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble Kalman inversion benchmark harness"};
  app.require_subcommand(1);

  CommonArgs run_args;
  std::string run_method;
  auto* run_cmd = app.add_subcommand("run", "run one experiment");
  add_common(run_cmd, &run_args);
  run_cmd->add_option("--method", run_method, "override the config method");

  CommonArgs compare_args;
  std::vector<std::string> compare_methods;
  auto* compare_cmd =
      app.add_subcommand("compare", "run several methods on a shared setup");
  add_common(compare_cmd, &compare_args);
  compare_cmd
      ->add_option("--method", compare_methods,
                   "methods to compare (repeatable, >= 2)")
      ->required();

  CommonArgs verify_args;
  auto* verify_cmd = app.add_subcommand(
      "verify-bound", "Monte-Carlo verification of the error bound");
  add_common(verify_cmd, &verify_args);

  CommonArgs size_args;
  auto* size_cmd =
      app.add_subcommand("sample-size", "ensemble-size planning report");
  add_common(size_cmd, &size_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      enki::ExperimentConfig config = load(run_args);
      if (!run_method.empty()) config.method = enki::parse_method(run_method);
      const enki::RunArtifact artifact = enki::cmd_run(config, run_args.out_dir);
      print_summary(artifact.summary);
      std::printf("history: %s\nsummary: %s\n",
                  artifact.history_csv_path.c_str(),
                  artifact.summary_json_path.c_str());
      return kExitOk;
    }
    if (compare_cmd->parsed()) {
      enki::ExperimentConfig config = load(compare_args);
      std::vector<enki::Method> methods;
      methods.reserve(compare_methods.size());
      for (const auto& name : compare_methods)
        methods.push_back(enki::parse_method(name));
      const enki::CompareResult cmp =
          enki::cmd_compare(config, methods, compare_args.out_dir);
      for (const auto& row : cmp.rows) print_summary(row);
      std::printf("comparison: %s\n", cmp.csv_path.c_str());
      return kExitOk;
    }
    if (verify_cmd->parsed()) {
      enki::ExperimentConfig config = load(verify_args);
      const enki::BoundVerification v =
          enki::cmd_verify_bound(config, verify_args.out_dir);
      std::printf("eps_max=%.6g c=%.6g c1=%.6g c2=%.6g dominance=%s\n",
                  v.eps_max, v.constants.c, v.constants.c1, v.constants.c2,
                  v.dominance ? "pass" : "FAIL");
      std::printf("grid: %s\n", v.csv_path.c_str());
      if (!v.dominance) {
        std::fprintf(
            stderr,
            "dominance failed: worst cell N=%d eps=%.6g margin=%.6g\n",
            v.grid.ensemble_sizes[static_cast<std::size_t>(v.worst_row)],
            v.grid.eps_values[static_cast<std::size_t>(v.worst_col)],
            v.worst_margin);
        return kExitError;
      }
      return kExitOk;
    }
    if (size_cmd->parsed()) {
      enki::ExperimentConfig config = load(size_args);
      const enki::SampleSizeReport report =
          enki::cmd_sample_size(config, size_args.out_dir);
      std::printf("eps=%.6g p_target=%.6g c_m=%.6g -> N_min=%lld\n",
                  report.eps, report.p_target, report.c_m, report.plan.n_min);
      static const char* kTermNames[5] = {
          "mean-drift tail (eps3 scale)", "prior tail (eps3 scale)",
          "noise tail (eps3 scale)", "prior tail (eps scale)",
          "gram tail (eps scale)"};
      for (int i = 0; i < 5; ++i)
        std::printf("  term %d (%s): %.6g%s\n", i, kTermNames[i],
                    report.plan.terms[static_cast<std::size_t>(i)],
                    i == report.plan.argmax ? "  <- binding" : "");
      std::printf("achieved probability at N_min: %.6g\nreport: %s\n",
                  report.achieved_probability, report.json_path.c_str());
      return kExitOk;
    }
  } catch (const enki::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const enki::DivergenceError& e) {
    std::fprintf(stderr, "divergence: %s\n", e.what());
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
