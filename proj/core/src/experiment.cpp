#include "enki/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "enki/csv.hpp"
#include "enki/error.hpp"

namespace enki {
namespace {

using nlohmann::json;

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

std::filesystem::path prepare_out_dir(const std::string& out_dir) {
  std::filesystem::path dir(out_dir.empty() ? "." : out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file " + path.string());
  out << text;
}

/// Field accessor that tracks known keys so typos in configs surface as
/// errors instead of silently falling back to defaults.
class JsonReader {
 public:
  JsonReader(const json& node, std::string path)
      : node_(node), path_(std::move(path)) {
    if (!node_.is_object())
      throw ConfigError("config field '" + path_ + "' must be an object");
  }

  ~JsonReader() = default;

  bool has(const std::string& key) {
    known_.push_back(key);
    return node_.contains(key);
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = node_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config field '" + path_ + key + "' has wrong type");
    }
  }

  void read_index(const std::string& key, Eigen::Index& out) {
    long long v = static_cast<long long>(out);
    read(key, v);
    out = static_cast<Eigen::Index>(v);
  }

  const json& child(const std::string& key) {
    known_.push_back(key);
    return node_.at(key);
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (std::find(known_.begin(), known_.end(), it.key()) == known_.end())
        throw ConfigError("unknown config field '" + path_ + it.key() + "'");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::vector<std::string> known_;
};

ProblemKind parse_problem_kind(const std::string& name) {
  if (name == "deconv") return ProblemKind::deconv;
  if (name == "lorenz96") return ProblemKind::lorenz96;
  if (name == "heat2d") return ProblemKind::heat2d;
  throw ConfigError("config field 'problem.kind' must be one of "
                    "deconv|lorenz96|heat2d, got '" + name + "'");
}

json problem_to_json(const ExperimentConfig& c) {
  json p;
  p["kind"] = to_string(c.problem);
  switch (c.problem) {
    case ProblemKind::deconv:
      p["n"] = static_cast<long long>(c.deconv.n);
      p["kernel_a"] = c.deconv.kernel_a;
      p["length_scale"] = c.deconv.length_scale;
      p["periodicity"] = c.deconv.periodicity;
      p["variance"] = c.deconv.variance;
      p["noise_percent"] = c.deconv.noise_percent;
      break;
    case ProblemKind::lorenz96:
      p["n"] = static_cast<long long>(c.lorenz.n);
      p["m"] = static_cast<long long>(c.lorenz.m);
      p["forcing"] = c.lorenz.forcing;
      p["t_final"] = c.lorenz.t_final;
      p["step"] = c.lorenz.step;
      p["prior_mean"] = c.lorenz.prior_mean;
      p["length_scale"] = c.lorenz.length_scale;
      p["periodicity"] = c.lorenz.periodicity;
      p["truth_jitter"] = c.lorenz.truth_jitter;
      p["noise_percent"] = c.lorenz.noise_percent;
      break;
    case ProblemKind::heat2d:
      p["s"] = static_cast<long long>(c.heat.s);
      p["m"] = static_cast<long long>(c.heat.m);
      p["forcing"] = c.heat.forcing;
      p["face"] = c.heat.face == FaceAverage::arithmetic ? "arithmetic"
                                                         : "harmonic";
      p["noise_percent"] = c.heat.noise_percent;
      break;
  }
  return p;
}

json config_to_json_object(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["problem"] = problem_to_json(c);
  j["method"] = to_string(c.method);
  j["ensemble_size"] = static_cast<long long>(c.resolved_ensemble_size());
  j["mu"] = c.mu;
  j["eps_c"] = c.resolved_eps_c();
  j["max_iterations"] = c.max_iterations;
  j["q"] = c.q;
  j["eps_delta"] = c.eps_delta;
  j["alpha_bound"] = c.alpha_bound;
  j["recompute_every"] = c.recompute_every;
  j["warmup_iterations"] = c.warmup_iterations;
  j["chada_beta"] = c.chada_beta;
  j["use_fixed_point_alpha"] = c.use_fixed_point_alpha;
  j["record_fixed_point_alpha"] = c.record_fixed_point_alpha;
  j["seed"] = c.seed;
  j["bound"] = {{"ensemble_sizes", c.bound.ensemble_sizes},
                {"eps_count", c.bound.eps_count},
                {"trials", c.bound.trials},
                {"eta", c.bound.eta},
                {"corollary_mode", c.bound.corollary_mode}};
  j["sample_size"] = {{"eps", c.sample_size.eps},
                      {"p_target", c.sample_size.p_target},
                      {"c_m", c.sample_size.c_m}};
  return j;
}

std::vector<std::string> history_header(Method method, bool with_fixed_point) {
  std::vector<std::string> cols = {"k", "loss", "rel_change", "spread"};
  if (method == Method::mc2) {
    cols.insert(cols.end(), {"alpha_min", "alpha_max", "alpha_mean"});
  } else {
    cols.push_back("alpha");
  }
  if (method == Method::mc1 || method == Method::mc2) {
    cols.push_back("delta_k");
    cols.push_back("eps_delta_current");
  }
  if (method == Method::mc1 && with_fixed_point)
    cols.push_back("alpha_fixed_point");
  cols.push_back("rel_error_vs_truth");
  return cols;
}

void write_history_csv(const std::filesystem::path& path, Method method,
                       bool with_fixed_point,
                       const std::vector<IterationRecord>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file " + path.string());
  CsvWriter csv(out);
  csv.write_row(history_header(method, with_fixed_point));
  for (const auto& rec : history) {
    std::vector<std::string> row = {
        CsvWriter::format(rec.k), CsvWriter::format(rec.loss),
        CsvWriter::format(rec.rel_change), CsvWriter::format(rec.spread)};
    if (method == Method::mc2) {
      row.push_back(CsvWriter::format(rec.alpha_min));
      row.push_back(CsvWriter::format(rec.alpha_max));
      row.push_back(CsvWriter::format(rec.alpha_mean));
    } else {
      row.push_back(CsvWriter::format(rec.alpha_mean));
    }
    if (method == Method::mc1 || method == Method::mc2) {
      row.push_back(CsvWriter::format(rec.delta));
      row.push_back(CsvWriter::format(rec.eps_delta));
    }
    if (method == Method::mc1 && with_fixed_point)
      row.push_back(CsvWriter::format(rec.alpha_fixed_point));
    row.push_back(CsvWriter::format(rec.rel_error));
    csv.write_row(row);
  }
}

json summary_to_json(const RunSummary& s) {
  json j;
  j["method"] = s.method;
  j["iterations"] = s.iterations;
  j["forward_evaluations"] = s.forward_evaluations;
  j["wall_seconds"] = s.wall_seconds;
  j["final_loss"] = s.final_loss;
  j["final_rel_error"] = s.final_rel_error;
  j["stop_reason"] = s.stop_reason;
  j["seed"] = s.seed;
  return j;
}

RunSummary summarize(const ExperimentConfig& config, Method method,
                     const RunResult& result, double wall_seconds) {
  RunSummary s;
  s.method = to_string(method);
  s.iterations = result.iterations;
  s.forward_evaluations = result.forward_evaluations;
  s.wall_seconds = wall_seconds;
  s.final_loss = result.final_loss;
  s.final_rel_error = result.final_rel_error;
  s.stop_reason = to_string(result.reason);
  s.seed = config.seed;
  return s;
}

}  // namespace

Method parse_method(const std::string& name) {
  if (name == "vanilla") return Method::vanilla;
  if (name == "mc1") return Method::mc1;
  if (name == "mc2") return Method::mc2;
  if (name == "chada") return Method::chada;
  if (name == "nesterov") return Method::nesterov;
  if (name == "anderson") return Method::anderson;
  throw ConfigError("config field 'method' must be one of "
                    "vanilla|mc1|mc2|chada|nesterov|anderson, got '" +
                    name + "'");
}

std::string to_string(Method method) {
  switch (method) {
    case Method::vanilla: return "vanilla";
    case Method::mc1: return "mc1";
    case Method::mc2: return "mc2";
    case Method::chada: return "chada";
    case Method::nesterov: return "nesterov";
    case Method::anderson: return "anderson";
  }
  return "unknown";
}

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::deconv: return "deconv";
    case ProblemKind::lorenz96: return "lorenz96";
    case ProblemKind::heat2d: return "heat2d";
  }
  return "unknown";
}

double ExperimentConfig::resolved_eps_c() const {
  if (eps_c > 0.0) return eps_c;
  return problem_is_linear() ? 1e-5 : 1e-4;
}

Eigen::Index ExperimentConfig::resolved_ensemble_size() const {
  if (ensemble_size > 0) return ensemble_size;
  switch (problem) {
    case ProblemKind::deconv: return 20;
    case ProblemKind::lorenz96: return 100;
    case ProblemKind::heat2d: return 50;
  }
  return 20;
}

McRunConfig ExperimentConfig::mc_config() const {
  McRunConfig mc;
  mc.params.q = q;
  mc.params.eps_delta = eps_delta;
  mc.params.alpha_bound = alpha_bound;
  mc.recompute_every = recompute_every;
  mc.warmup_iterations = warmup_iterations;
  mc.use_fixed_point = use_fixed_point_alpha;
  mc.record_fixed_point = record_fixed_point_alpha;
  return mc;
}

void ExperimentConfig::validate() const {
  if (schema_version != 1)
    throw ConfigError("config field 'schema_version' must be 1");
  if (mu <= 0.0) throw ConfigError("config field 'mu' must be positive");
  if (eps_c < 0.0) throw ConfigError("config field 'eps_c' must be nonnegative");
  if (max_iterations < 1)
    throw ConfigError("config field 'max_iterations' must be >= 1");
  if (q <= 0.0 || q >= 1.0)
    throw ConfigError("config field 'q' must be in (0, 1)");
  if (eps_delta <= 0.0)
    throw ConfigError("config field 'eps_delta' must be positive");
  if (alpha_bound <= 1.0)
    throw ConfigError("config field 'alpha_bound' must be > 1");
  if (recompute_every < 1)
    throw ConfigError("config field 'recompute_every' must be >= 1");
  if (warmup_iterations < 0)
    throw ConfigError("config field 'warmup_iterations' must be >= 0");
  if (chada_beta < 0.0 || chada_beta > 0.8)
    throw ConfigError("config field 'chada_beta' must be in [0, 0.8]");
  if (ensemble_size < 0)
    throw ConfigError("config field 'ensemble_size' must be >= 0");
  if (bound.trials < 1)
    throw ConfigError("config field 'bound.trials' must be >= 1");
  if (bound.eps_count < 1)
    throw ConfigError("config field 'bound.eps_count' must be >= 1");
  if (bound.eta <= 0.0 || bound.eta >= 1.0)
    throw ConfigError("config field 'bound.eta' must be in (0, 1)");
  if (bound.ensemble_sizes.empty())
    throw ConfigError("config field 'bound.ensemble_sizes' must be nonempty");
  for (const int n : bound.ensemble_sizes)
    if (n < 1)
      throw ConfigError("config field 'bound.ensemble_sizes' entries must be >= 1");
  if (sample_size.eps <= 0.0)
    throw ConfigError("config field 'sample_size.eps' must be positive");
  if (sample_size.p_target <= 0.0 || sample_size.p_target >= 1.0)
    throw ConfigError("config field 'sample_size.p_target' must be in (0, 1)");
  if (sample_size.c_m <= 0.0)
    throw ConfigError("config field 'sample_size.c_m' must be positive");
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  ExperimentConfig c;
  JsonReader reader(root, "");
  reader.read("schema_version", c.schema_version);

  if (reader.has("problem")) {
    JsonReader pr(reader.child("problem"), "problem.");
    std::string kind = "deconv";
    pr.read("kind", kind);
    c.problem = parse_problem_kind(kind);
    switch (c.problem) {
      case ProblemKind::deconv:
        pr.read_index("n", c.deconv.n);
        pr.read("kernel_a", c.deconv.kernel_a);
        pr.read("length_scale", c.deconv.length_scale);
        pr.read("periodicity", c.deconv.periodicity);
        pr.read("variance", c.deconv.variance);
        pr.read("noise_percent", c.deconv.noise_percent);
        break;
      case ProblemKind::lorenz96:
        pr.read_index("n", c.lorenz.n);
        pr.read_index("m", c.lorenz.m);
        pr.read("forcing", c.lorenz.forcing);
        pr.read("t_final", c.lorenz.t_final);
        pr.read("step", c.lorenz.step);
        pr.read("prior_mean", c.lorenz.prior_mean);
        pr.read("length_scale", c.lorenz.length_scale);
        pr.read("periodicity", c.lorenz.periodicity);
        pr.read("truth_jitter", c.lorenz.truth_jitter);
        pr.read("noise_percent", c.lorenz.noise_percent);
        break;
      case ProblemKind::heat2d: {
        pr.read_index("s", c.heat.s);
        pr.read_index("m", c.heat.m);
        pr.read("forcing", c.heat.forcing);
        std::string face = "arithmetic";
        pr.read("face", face);
        if (face == "arithmetic") c.heat.face = FaceAverage::arithmetic;
        else if (face == "harmonic") c.heat.face = FaceAverage::harmonic;
        else throw ConfigError("config field 'problem.face' must be arithmetic|harmonic");
        pr.read("noise_percent", c.heat.noise_percent);
        break;
      }
    }
    pr.finish();
  }

  std::string method_name = to_string(c.method);
  reader.read("method", method_name);
  c.method = parse_method(method_name);
  long long ensemble_size = 0;
  reader.read("ensemble_size", ensemble_size);
  c.ensemble_size = static_cast<Eigen::Index>(ensemble_size);
  reader.read("mu", c.mu);
  reader.read("eps_c", c.eps_c);
  reader.read("max_iterations", c.max_iterations);
  reader.read("q", c.q);
  reader.read("eps_delta", c.eps_delta);
  reader.read("alpha_bound", c.alpha_bound);
  reader.read("recompute_every", c.recompute_every);
  reader.read("warmup_iterations", c.warmup_iterations);
  reader.read("chada_beta", c.chada_beta);
  reader.read("use_fixed_point_alpha", c.use_fixed_point_alpha);
  reader.read("record_fixed_point_alpha", c.record_fixed_point_alpha);
  reader.read("seed", c.seed);

  if (reader.has("bound")) {
    JsonReader br(reader.child("bound"), "bound.");
    br.read("ensemble_sizes", c.bound.ensemble_sizes);
    br.read("eps_count", c.bound.eps_count);
    br.read("trials", c.bound.trials);
    br.read("eta", c.bound.eta);
    br.read("corollary_mode", c.bound.corollary_mode);
    br.finish();
  }
  if (reader.has("sample_size")) {
    JsonReader sr(reader.child("sample_size"), "sample_size.");
    sr.read("eps", c.sample_size.eps);
    sr.read("p_target", c.sample_size.p_target);
    sr.read("c_m", c.sample_size.c_m);
    sr.finish();
  }
  reader.finish();
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment_config(text.str());
}

std::string config_to_json(const ExperimentConfig& config) {
  return config_to_json_object(config).dump(2) + "\n";
}

InverseProblem build_problem(const ExperimentConfig& config) {
  switch (config.problem) {
    case ProblemKind::deconv:
      return make_deconv_problem(config.deconv, config.seed);
    case ProblemKind::lorenz96:
      return make_lorenz96_problem(config.lorenz, config.seed);
    case ProblemKind::heat2d:
      return make_heat2d_problem(config.heat, config.seed);
  }
  throw ConfigError("config field 'problem.kind' is invalid");
}

RunResult execute_method(const ExperimentConfig& config, Method method,
                         const InverseProblem& problem,
                         const Ensemble& initial) {
  const NoiseModel noise(config.mu, problem.op.output_dimension());
  const Termination term{config.resolved_eps_c(), config.max_iterations};
  RunOptions options;
  options.truth = problem.truth;

  switch (method) {
    case Method::vanilla:
      return run_vanilla(initial, problem.op, noise, problem.data, term, options);
    case Method::mc1:
      return run_mc1(initial, problem.op, noise, problem.data, term,
                     config.mc_config(), options);
    case Method::mc2:
      return run_mc2(initial, problem.op, noise, problem.data, term,
                     config.mc_config(), options);
    case Method::chada: {
      ChadaPolicy policy(config.chada_beta);
      return run(initial, problem.op, noise, problem.data, term, policy, options);
    }
    case Method::nesterov:
      return run_nesterov(initial, problem.op, noise, problem.data, term, options);
    case Method::anderson: {
      AndersonPolicy policy;
      return run(initial, problem.op, noise, problem.data, term, policy, options);
    }
  }
  throw ConfigError("config field 'method' is invalid");
}

RunArtifact cmd_run(const ExperimentConfig& config,
                    const std::string& out_dir) {
  config.validate();
  const auto dir = prepare_out_dir(out_dir);
  const InverseProblem problem = build_problem(config);
  const Ensemble initial = draw_initial_ensemble(
      problem, config.resolved_ensemble_size(), config.seed);

  const auto start = std::chrono::steady_clock::now();
  const RunResult result = execute_method(config, config.method, problem, initial);
  const double wall = elapsed_seconds(start);

  RunArtifact artifact;
  artifact.summary = summarize(config, config.method, result, wall);
  artifact.history_csv_path = (dir / "history.csv").string();
  artifact.summary_json_path = (dir / "summary.json").string();

  write_history_csv(dir / "history.csv", config.method,
                    config.record_fixed_point_alpha, result.history);
  json j;
  j["schema_version"] = 1;
  j["config"] = config_to_json_object(config);
  j["summary"] = summary_to_json(artifact.summary);
  j["history_csv"] = "history.csv";
  write_text_file(dir / "summary.json", j.dump(2) + "\n");
  return artifact;
}

CompareResult cmd_compare(const ExperimentConfig& config,
                          const std::vector<Method>& methods,
                          const std::string& out_dir) {
  config.validate();
  if (methods.size() < 2)
    throw ConfigError("compare requires at least two methods");
  const auto dir = prepare_out_dir(out_dir);
  const InverseProblem problem = build_problem(config);
  const Ensemble initial = draw_initial_ensemble(
      problem, config.resolved_ensemble_size(), config.seed);

  CompareResult cmp;
  for (const Method method : methods) {
    const auto start = std::chrono::steady_clock::now();
    const RunResult result = execute_method(config, method, problem, initial);
    cmp.rows.push_back(summarize(config, method, result, elapsed_seconds(start)));
  }

  cmp.csv_path = (dir / "compare.csv").string();
  cmp.summary_path = (dir / "compare_summary.json").string();
  {
    std::ofstream out(cmp.csv_path, std::ios::binary);
    if (!out) throw Error("cannot open output file " + cmp.csv_path);
    CsvWriter csv(out);
    csv.write_row({"method", "iterations", "forward_evaluations", "final_loss",
                   "rel_error_vs_truth", "stop_reason"});
    for (const auto& row : cmp.rows)
      csv.write_row({row.method, CsvWriter::format(row.iterations),
                     CsvWriter::format(row.forward_evaluations),
                     CsvWriter::format(row.final_loss),
                     CsvWriter::format(row.final_rel_error), row.stop_reason});
  }
  json j;
  j["schema_version"] = 1;
  j["config"] = config_to_json_object(config);
  json rows = json::array();
  for (const auto& row : cmp.rows) rows.push_back(summary_to_json(row));
  j["rows"] = rows;
  write_text_file(cmp.summary_path, j.dump(2) + "\n");
  return cmp;
}

BoundVerification cmd_verify_bound(const ExperimentConfig& config,
                                   const std::string& out_dir) {
  config.validate();
  if (!config.problem_is_linear())
    throw ConfigError("verify-bound requires the linear problem (deconv)");
  const auto dir = prepare_out_dir(out_dir);
  const InverseProblem problem = build_problem(config);
  const LinearProblem lp = to_linear_problem(problem, config.mu);
  const ProblemNorms norms = ProblemNorms::compute(lp);

  BoundVerification v;
  v.eps_max = bound_eps_max(norms, config.bound.eta, config.bound.corollary_mode);

  FitInput input;
  input.ensemble_sizes = config.bound.ensemble_sizes;
  input.anchor_eps = v.eps_max;
  for (int j = 1; j <= config.bound.eps_count; ++j)
    input.validation_eps.push_back(v.eps_max * j / config.bound.eps_count);
  for (const int n : config.bound.ensemble_sizes)
    input.error_samples.push_back(
        simulate_error_samples(lp, n, config.bound.trials, config.seed));

  v.constants =
      fit_bound_constants(input, norms, config.bound.eta, config.seed);
  v.grid = evaluate_bound_grid(input, v.constants, norms, config.seed);

  v.dominance = true;
  v.worst_margin = -std::numeric_limits<double>::infinity();
  const double trials = static_cast<double>(config.bound.trials);
  for (Eigen::Index i = 0; i < v.grid.empirical.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.grid.empirical.cols(); ++j) {
      const double emp = v.grid.empirical(i, j);
      const double se = std::sqrt(emp * (1.0 - emp) / trials);
      const double margin = v.grid.theoretical(i, j) - (emp + 1.96 * se);
      if (margin > v.worst_margin) {
        v.worst_margin = margin;
        v.worst_row = static_cast<int>(i);
        v.worst_col = static_cast<int>(j);
      }
    }
  }
  if (v.worst_margin > 1e-12) v.dominance = false;

  v.csv_path = (dir / "bound_grid.csv").string();
  v.summary_path = (dir / "bound_summary.json").string();
  {
    std::ofstream out(v.csv_path, std::ios::binary);
    if (!out) throw Error("cannot open output file " + v.csv_path);
    CsvWriter csv(out);
    csv.write_row({"N", "eps", "empirical", "theoretical", "K", "seed"});
    for (Eigen::Index i = 0; i < v.grid.empirical.rows(); ++i)
      for (Eigen::Index j = 0; j < v.grid.empirical.cols(); ++j)
        csv.write_row(
            {CsvWriter::format(v.grid.ensemble_sizes[static_cast<std::size_t>(i)]),
             CsvWriter::format(v.grid.eps_values[static_cast<std::size_t>(j)]),
             CsvWriter::format(v.grid.empirical(i, j)),
             CsvWriter::format(v.grid.theoretical(i, j)),
             CsvWriter::format(v.grid.trials),
             CsvWriter::format(static_cast<long long>(v.grid.seed))});
  }
  json j;
  j["schema_version"] = 1;
  j["config"] = config_to_json_object(config);
  j["eps_max"] = v.eps_max;
  j["constants"] = {{"c", v.constants.c},
                    {"c1", v.constants.c1},
                    {"c2", v.constants.c2},
                    {"eta", v.constants.eta}};
  j["dominance"] = v.dominance;
  j["worst_margin"] = v.worst_margin;
  j["worst_cell"] = {
      {"N", v.grid.ensemble_sizes[static_cast<std::size_t>(v.worst_row)]},
      {"eps", v.grid.eps_values[static_cast<std::size_t>(v.worst_col)]}};
  write_text_file(v.summary_path, j.dump(2) + "\n");
  return v;
}

SampleSizeReport cmd_sample_size(const ExperimentConfig& config,
                                 const std::string& out_dir) {
  config.validate();
  const auto dir = prepare_out_dir(out_dir);
  const InverseProblem problem = build_problem(config);
  const ProblemNorms norms = ProblemNorms::from_prior(
      problem.prior, config.mu, problem.op.output_dimension());

  SampleSizeReport report;
  report.eps = config.sample_size.eps;
  report.p_target = config.sample_size.p_target;
  report.c_m = config.sample_size.c_m;
  report.plan = plan_sample_size(report.eps, report.p_target, norms, report.c_m);

  // Confidence achieved at the planned size, checked with the consistent
  // constants c1 = c_m, c2 = 1/c_m.
  BoundConstants consts;
  consts.c1 = report.c_m;
  consts.c2 = 1.0 / report.c_m;
  consts.eta = config.bound.eta;
  consts.mu = config.mu;
  const TailTerms t = tail_terms(report.eps,
                                 static_cast<double>(report.plan.n_min),
                                 consts, norms);
  report.achieved_probability =
      1.0 - 6.0 * t.e3 - t.e4 - t.e5 - t.e1 - 2.0 * t.e2;

  report.json_path = (dir / "sample_size.json").string();
  json j;
  j["schema_version"] = 1;
  j["config"] = config_to_json_object(config);
  j["eps"] = report.eps;
  j["p_target"] = report.p_target;
  j["c_m"] = report.c_m;
  j["n_min"] = report.plan.n_min;
  j["terms"] = report.plan.terms;
  j["binding_term"] = report.plan.argmax;
  j["achieved_probability"] = report.achieved_probability;
  write_text_file(report.json_path, j.dump(2) + "\n");
  return report;
}

}  // namespace enki
