#include "multikoop/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>

#include "multikoop/analysis.hpp"
#include "multikoop/dataset.hpp"
#include "multikoop/fit.hpp"
#include "multikoop/game.hpp"
#include "multikoop/matrix_archive.hpp"
#include "multikoop/parallel.hpp"
#include "multikoop/rng.hpp"

namespace multikoop {

namespace {

using nlohmann::json;

// Stream tags keep the per-purpose RNG families disjoint from the
// per-sample streams used by generate_dataset (plain indices).
constexpr std::uint64_t kSimStream = 0x53494d5500000000ULL;
constexpr std::uint64_t kEvalStream = 0x5445535400000000ULL;
constexpr std::uint64_t kControlStream = 0x4354524c00000000ULL;

double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::filesystem::path prepare_output_dir(const ExperimentConfig& config) {
  std::filesystem::path dir(config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + config.output_dir + ": " + ec.message());
  return dir;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " (run the producing subcommand first)");
  return json::parse(in);
}

std::string model_path(const ExperimentConfig& config) {
  return (std::filesystem::path(config.output_dir) /
          (to_string(config.variant) + "_model.mkoop"))
      .string();
}

std::string reduced_path(const ExperimentConfig& config) {
  return (std::filesystem::path(config.output_dir) /
          (to_string(config.variant) + "_reduced.mkoop"))
      .string();
}

VectorXd sample_box(Rng& rng, long dim, double box) {
  VectorXd x(dim);
  for (long k = 0; k < dim; ++k) x[k] = rng.uniform(-box, box);
  return x;
}

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

Trajectory simulate_uncontrolled(Variant variant, const VectorXd& x0, const ScaleConfig& scale,
                                 int n_steps) {
  const MatrixXd u = MatrixXd::Zero(n_steps, kNumAgents);
  return variant == Variant::flat ? simulate_flat(x0, u, scale.dt_slow, n_steps)
                                  : simulate_hier(x0, u, scale, n_steps);
}

struct EvalResult {
  std::vector<double> rms;
  int n_used = 0;
  int n_skipped = 0;
};

// Mean per-agent RMS of the model's slow-state prediction against the
// uncontrolled benchmark over fresh initial conditions (streams disjoint
// from training). Divergent truths are skipped and replaced.
EvalResult evaluate_rms(const StructuredKoopman& model, const ReducedModel* reduced,
                        const ExperimentConfig& config) {
  const int n_traj = config.evaluation.n_trajectories;
  const int n_steps = config.evaluation.n_steps;
  const long dim = config.variant == Variant::flat ? kFlatDim : kHierDim;
  const CombinedSystem sys =
      reduced != nullptr ? assemble_combined(*reduced) : assemble_combined(model);
  const int n_agents = model.n_agents();

  EvalResult result;
  result.rms.assign(n_agents, 0.0);
  long idx = 0;
  const long idx_limit = 3L * n_traj + 10;
  while (result.n_used < n_traj && idx < idx_limit) {
    Rng rng(Rng::derive(config.seed, kEvalStream + static_cast<std::uint64_t>(idx)));
    ++idx;
    const VectorXd x0 = sample_box(rng, dim, 1.0);
    Trajectory truth;
    try {
      truth = simulate_uncontrolled(config.variant, x0, config.scale, n_steps);
    } catch (const DivergenceError&) {
      ++result.n_skipped;
      continue;
    }
    VectorXd psi0(sys.dim());
    for (int i = 0; i < n_agents; ++i)
      psi0.segment(sys.offset[i], sys.block_dim(i)) =
          lift(model.dicts.x[i], x0.segment(i * kSlowDimPerAgent, kSlowDimPerAgent));
    const MatrixXd pred = predict(sys, psi0, MatrixXd(0, 0), n_steps);
    const int truth_stride = config.variant == Variant::flat ? 1 : config.scale.m;
    for (int i = 0; i < n_agents; ++i) {
      double se = 0.0;
      for (int k = 1; k <= n_steps; ++k)
        for (int c = 0; c < kSlowDimPerAgent; ++c) {
          const double diff =
              pred(k, sys.offset[i] + c) - truth.states(k * truth_stride, i * kSlowDimPerAgent + c);
          se += diff * diff;
        }
      result.rms[i] += std::sqrt(se / (static_cast<double>(n_steps) * kSlowDimPerAgent));
    }
    ++result.n_used;
  }
  if (result.n_used < n_traj)
    throw DataError("evaluation: only " + std::to_string(result.n_used) + " of " +
                    std::to_string(n_traj) + " test trajectories usable (rest diverged)");
  for (double& r : result.rms) r /= result.n_used;
  return result;
}

}  // namespace

nlohmann::json run_simulate(const ExperimentConfig& config) {
  config.validate();
  const auto dir = prepare_output_dir(config);
  const auto start = std::chrono::steady_clock::now();

  json summary;
  summary["variant"] = to_string(config.variant);
  summary["seed"] = config.seed;
  summary["n_ic"] = config.simulate.n_ic;
  summary["n_steps"] = config.simulate.n_steps;
  auto& files = summary["files"] = json::array();
  auto& failures = summary["failures"] = json::array();

  const long dim = config.variant == Variant::flat ? kFlatDim : kHierDim;
  std::vector<std::string> header;
  header.emplace_back("t");
  for (const char* name : {"x11", "x12", "x21", "x22"}) header.emplace_back(name);
  if (config.variant == Variant::hier)
    for (const char* name : {"y11", "y12", "y21", "y22", "w1", "w2"}) header.emplace_back(name);

  for (int idx = 0; idx < config.simulate.n_ic; ++idx) {
    Rng rng(Rng::derive(config.seed, kSimStream + static_cast<std::uint64_t>(idx)));
    const VectorXd x0 = sample_box(rng, dim, config.simulate.ic_box);
    Trajectory traj;
    try {
      traj = simulate_uncontrolled(config.variant, x0, config.scale, config.simulate.n_steps);
    } catch (const DivergenceError& err) {
      failures.push_back({{"index", idx}, {"message", err.what()}});
      continue;
    }
    const std::string name =
        "trajectory_" + to_string(config.variant) + "_" + std::to_string(idx) + ".csv";
    std::ofstream out(dir / name);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    for (int r = 0; r < traj.steps(); ++r) {
      out << csv_number(traj.times[r]);
      for (long c = 0; c < traj.states.cols(); ++c) out << ',' << csv_number(traj.states(r, c));
      out << '\n';
    }
    files.push_back(name);
  }
  summary["wall_time_s"] = seconds_since(start);
  write_json_file(dir / "simulate_summary.json", summary);
  return summary;
}

nlohmann::json run_fit(const ExperimentConfig& config) {
  config.validate();
  const auto dir = prepare_output_dir(config);
  const auto start = std::chrono::steady_clock::now();

  const DictionarySet dicts = make_benchmark_dictionaries(
      config.variant, config.seed, config.dictionary.n_x_features, config.dictionary.n_y_features,
      config.dictionary.n_w_features, config.dictionary.bandwidth);
  const SnapshotDataset data =
      generate_dataset(config.variant, config.training.n_ic, config.scale, config.seed, dicts);

  FitOptions options;
  options.ridge = config.training.ridge;
  options.rho_target = config.training.rho_target;
  options.zero_xw_blocks = config.training.zero_xw_blocks;
  FitReport fit_report;
  const StructuredKoopman model = config.variant == Variant::flat
                                      ? fit_flat(data, dicts, options, &fit_report)
                                      : fit_hier(data, dicts, config.scale, options, &fit_report);

  json summary;
  summary["variant"] = to_string(config.variant);
  summary["seed"] = config.seed;
  summary["n_train_ic"] = config.training.n_ic;
  summary["n_samples"] = data.n_samples;
  summary["n_discarded"] = data.n_discarded;

  std::optional<ReducedModel> reduced;
  if (config.variant == Variant::hier) {
    reduced = build_reduced(model);
    const ConsistencyReport consistency =
        consistency_check(model, *reduced, config.scale, config.seed);
    summary["reduction_consistency"] = {
        {"max_average_deviation", consistency.max_average_deviation},
        {"max_slow_deviation", consistency.max_slow_deviation}};
  }

  const EvalResult eval = evaluate_rms(model, reduced ? &*reduced : nullptr, config);
  summary["rms_per_agent"] = eval.rms;
  summary["n_eval_trajectories"] = eval.n_used;
  summary["n_eval_skipped"] = eval.n_skipped;

  model.save(model_path(config));
  summary["model_file"] = model_path(config);
  summary["model_hash"] = file_hash(model_path(config));
  if (reduced) {
    reduced->source_hash = summary["model_hash"].get<std::string>();
    reduced->save(reduced_path(config));
    summary["reduced_file"] = reduced_path(config);
    summary["reduced_hash"] = file_hash(reduced_path(config));
  }

  auto& blocks = summary["fit_blocks"] = json::array();
  for (const auto& b : fit_report.blocks)
    blocks.push_back({{"name", b.name},
                      {"n_samples", b.n_samples},
                      {"rms_residual", b.rms_residual},
                      {"grad_max", b.grad_max},
                      {"rho_raw", b.rho_raw},
                      {"rho_projected", b.rho_projected}});
  summary["warnings"] = fit_report.warnings;
  summary["wall_time_s"] = seconds_since(start);
  write_json_file(dir / (to_string(config.variant) + "_fit_report.json"), summary);
  return summary;
}

nlohmann::json run_analyze(const ExperimentConfig& config) {
  config.validate();
  const auto dir = prepare_output_dir(config);
  const StructuredKoopman model = StructuredKoopman::load(model_path(config));
  std::optional<ReducedModel> reduced;
  if (config.variant == Variant::hier) reduced = ReducedModel::load(reduced_path(config));

  MetricsReport report = analyze(model, reduced ? &*reduced : nullptr);
  report.metadata["model_hash"] = file_hash(model_path(config));
  const json j = report.to_json();
  write_json_file(dir / (to_string(config.variant) + "_metrics.json"), j);
  write_text_file(dir / (to_string(config.variant) + "_metrics.txt"), report.to_table());
  return j;
}

nlohmann::json run_control(const ExperimentConfig& config) {
  config.validate();
  const auto dir = prepare_output_dir(config);
  const auto start = std::chrono::steady_clock::now();
  const StructuredKoopman model = StructuredKoopman::load(model_path(config));
  std::optional<ReducedModel> reduced;
  if (config.variant == Variant::hier) reduced = ReducedModel::load(reduced_path(config));

  const int n_ic = config.control.n_ic;
  const int n_agents = model.n_agents();
  struct IcRecord {
    VectorXd x0;
    std::vector<double> baseline;
    GameSolution opt, eq;
    bool ok_opt = false, ok_eq = false;
    std::string err_opt, err_eq;
  };
  std::vector<IcRecord> records(n_ic);

  GameOptions game_options;
  game_options.mcp.max_iterations = config.control.max_iterations;

  parallel_for(n_ic, [&](long idx) {
    IcRecord& rec = records[idx];
    Rng rng(Rng::derive(config.seed, kControlStream + static_cast<std::uint64_t>(idx)));
    rec.x0 = sample_box(rng, n_agents * kSlowDimPerAgent, config.control.ic_box);
    const ControlProblem problem = make_control_problem(
        model, reduced ? &*reduced : nullptr, rec.x0, config.control.horizon, config.control.x_min,
        config.control.x_max, config.control.u_min, config.control.u_max);
    rec.baseline = baseline_rollout(problem);
    try {
      rec.opt = solve_optimum(problem, game_options);
      rec.ok_opt = true;
    } catch (const Error& err) {
      rec.err_opt = err.what();
    }
    const GameSolution* warm =
        (config.control.warm_start && rec.ok_opt) ? &rec.opt : nullptr;
    try {
      rec.eq = solve_equilibrium(problem, warm, game_options);
      rec.ok_eq = true;
    } catch (const Error& err) {
      rec.err_eq = err.what();
    }
  });

  json summary;
  summary["variant"] = to_string(config.variant);
  summary["seed"] = config.seed;
  summary["horizon"] = config.control.horizon;
  summary["n_ic"] = n_ic;
  auto& per_ic = summary["per_ic"] = json::array();

  std::string csv =
      "ic,x0_0,x0_1,x0_2,x0_3,baseline_total,optimum_total,equilibrium_total,eq_minus_opt,"
      "opt_converged,eq_converged,opt_iterations,eq_iterations,opt_fb_residual,eq_fb_residual,"
      "opt_time_s,eq_time_s\n";

  int failures = 0;
  int n_both = 0;
  double mean_base = 0.0, mean_opt = 0.0, mean_eq = 0.0, mean_delta = 0.0;
  std::vector<double> rms_opt(n_agents, 0.0), rms_eq(n_agents, 0.0);
  double max_fb = 0.0;
  double mean_opt_time = 0.0, mean_eq_time = 0.0;

  for (int idx = 0; idx < n_ic; ++idx) {
    const IcRecord& rec = records[idx];
    const double base_total =
        std::accumulate(rec.baseline.begin(), rec.baseline.end(), 0.0);
    json row;
    row["ic"] = idx;
    row["x0"] = std::vector<double>(rec.x0.data(), rec.x0.data() + rec.x0.size());
    row["baseline"] = {{"per_agent", rec.baseline}, {"total", base_total}};
    if (rec.ok_opt)
      row["optimum"] = rec.opt.to_json();
    else
      row["optimum"] = {{"error", rec.err_opt}};
    if (rec.ok_eq)
      row["equilibrium"] = rec.eq.to_json();
    else
      row["equilibrium"] = {{"error", rec.err_eq}};
    per_ic.push_back(row);

    csv += std::to_string(idx);
    for (long k = 0; k < rec.x0.size(); ++k) csv += "," + csv_number(rec.x0[k]);
    csv += "," + csv_number(base_total);
    csv += "," + (rec.ok_opt ? csv_number(rec.opt.total_objective) : std::string("nan"));
    csv += "," + (rec.ok_eq ? csv_number(rec.eq.total_objective) : std::string("nan"));
    csv += "," + (rec.ok_opt && rec.ok_eq
                      ? csv_number(rec.eq.total_objective - rec.opt.total_objective)
                      : std::string("nan"));
    csv += std::string(",") + (rec.ok_opt ? "1" : "0") + "," + (rec.ok_eq ? "1" : "0");
    csv += "," + std::to_string(rec.ok_opt ? rec.opt.iterations : -1);
    csv += "," + std::to_string(rec.ok_eq ? rec.eq.iterations : -1);
    csv += "," + (rec.ok_opt ? csv_number(rec.opt.fb_residual) : std::string("nan"));
    csv += "," + (rec.ok_eq ? csv_number(rec.eq.fb_residual) : std::string("nan"));
    csv += "," + (rec.ok_opt ? csv_number(rec.opt.wall_time_s) : std::string("nan"));
    csv += "," + (rec.ok_eq ? csv_number(rec.eq.wall_time_s) : std::string("nan"));
    csv += "\n";

    if (!rec.ok_opt || !rec.ok_eq) {
      ++failures;
      continue;
    }
    ++n_both;
    mean_base += base_total;
    mean_opt += rec.opt.total_objective;
    mean_eq += rec.eq.total_objective;
    mean_delta += rec.eq.total_objective - rec.opt.total_objective;
    mean_opt_time += rec.opt.wall_time_s;
    mean_eq_time += rec.eq.wall_time_s;
    max_fb = std::max({max_fb, rec.opt.fb_residual, rec.eq.fb_residual});
    for (int i = 0; i < n_agents; ++i) {
      rms_opt[i] += rec.opt.agents[i].rms_control;
      rms_eq[i] += rec.eq.agents[i].rms_control;
    }
  }

  json aggregate;
  aggregate["n_converged"] = n_both;
  aggregate["n_failed"] = failures;
  aggregate["convergence_rate"] = n_ic > 0 ? static_cast<double>(n_both) / n_ic : 0.0;
  if (n_both > 0) {
    for (int i = 0; i < n_agents; ++i) {
      rms_opt[i] /= n_both;
      rms_eq[i] /= n_both;
    }
    aggregate["mean_baseline_total"] = mean_base / n_both;
    aggregate["mean_optimum_total"] = mean_opt / n_both;
    aggregate["mean_equilibrium_total"] = mean_eq / n_both;
    aggregate["mean_eq_minus_opt"] = mean_delta / n_both;
    aggregate["mean_rms_control_optimum"] = rms_opt;
    aggregate["mean_rms_control_equilibrium"] = rms_eq;
    aggregate["max_fb_residual"] = max_fb;
    aggregate["mean_optimum_time_s"] = mean_opt_time / n_both;
    aggregate["mean_equilibrium_time_s"] = mean_eq_time / n_both;
  }
  summary["aggregate"] = aggregate;
  summary["wall_time_s"] = seconds_since(start);

  write_json_file(dir / (to_string(config.variant) + "_control.json"), summary);
  write_text_file(dir / (to_string(config.variant) + "_control.csv"), csv);

  if (failures > 0 && failures * 5 > n_ic)
    throw ConvergenceError("control: " + std::to_string(failures) + " of " + std::to_string(n_ic) +
                               " initial conditions failed to solve (results written to " +
                               config.output_dir + ")",
                           static_cast<double>(failures) / n_ic);
  return summary;
}

namespace {

// Reference values reported for this benchmark with learned observables;
// included in reports for qualitative comparison only.
json reference_values(Variant variant) {
  if (variant == Variant::flat) {
    return json{
        {"rms_per_agent", {0.038, 0.034}},
        {"mean_rms_control", 0.05},
        {"metrics",
         {{"K_xx_11",
           {{"gramian_control_norm", 0.018},
            {"gramian_cross_norm", 1.97},
            {"p_max", 54.67},
            {"initial_growth", 0.429},
            {"t_bound", 3.604}}},
          {"K_xx_22",
           {{"gramian_control_norm", 0.014},
            {"gramian_cross_norm", 2.32},
            {"p_max", 52.45},
            {"initial_growth", 0.194},
            {"t_bound", 3.581}}},
          {"K_comb",
           {{"gramian_control_norm", 0.046},
            {"initial_growth", 0.436},
            {"t_bound", 4.13}}}}}};
  }
  return json{
      {"rms_per_agent", {0.152, 0.175}},
      {"metrics",
       {{"K_xx_11",
         {{"gramian_cross_norm", 4.529},
          {"p_max", 97.39},
          {"initial_growth", 0.681},
          {"t_bound", 5.311}}},
        {"K_xx_22",
         {{"gramian_cross_norm", 5.817},
          {"p_max", 103.85},
          {"initial_growth", 0.402},
          {"t_bound", 4.421}}},
        {"K_comb", {{"initial_growth", 0.698}, {"t_bound", 5.880}}},
        {"B_xx_1",
         {{"gramian_control_norm", 0.0117},
          {"gramian_cross_norm", 4.043},
          {"p_max", 103.14},
          {"initial_growth", 0.692},
          {"t_bound", 5.519}}},
        {"B_xx_2",
         {{"gramian_control_norm", 0.0093},
          {"gramian_cross_norm", 6.403},
          {"p_max", 102.12},
          {"initial_growth", 0.415},
          {"t_bound", 4.334}}},
        {"B_xx_comb",
         {{"gramian_control_norm", 0.0295},
          {"initial_growth", 0.709},
          {"t_bound", 6.108}}}}}};
}

double json_number(const json& j, const char* key, double fallback) {
  if (j.contains(key) && j.at(key).is_number()) return j.at(key).get<double>();
  return fallback;
}

}  // namespace

nlohmann::json run_report(const ExperimentConfig& config) {
  config.validate();
  const auto dir = prepare_output_dir(config);
  const std::string variant = to_string(config.variant);

  json report;
  report["variant"] = variant;
  report["reference"] = reference_values(config.variant);
  std::string text = "Experiment report (" + variant + ")\n\n";
  bool have_any = false;

  const auto fit_path = dir / (variant + "_fit_report.json");
  if (std::filesystem::exists(fit_path)) {
    const json fit = read_json_file(fit_path);
    report["fit"] = fit;
    have_any = true;
    text += "Model accuracy (mean RMS per agent, held-out rollouts):\n";
    const auto& rms = fit.at("rms_per_agent");
    const auto& ref = report["reference"]["rms_per_agent"];
    for (std::size_t i = 0; i < rms.size(); ++i) {
      char line[128];
      std::snprintf(line, sizeof(line), "  agent %zu: %.4f  (reference %.3f)\n", i + 1,
                    rms[i].get<double>(), ref[i].get<double>());
      text += line;
    }
    text += "\n";
  }

  const auto metrics_path = dir / (variant + "_metrics.json");
  json soft_checks = json::array();
  if (std::filesystem::exists(metrics_path)) {
    const json metrics = read_json_file(metrics_path);
    report["metrics"] = metrics;
    have_any = true;
    text += "Stability and coupling metrics (own values; references in JSON):\n";
    double max_agent_tb = 0.0, comb_tb = 0.0;
    double max_agent_ig = -1e300, comb_ig = -1e300;
    for (const auto& col : metrics.at("columns")) {
      const std::string name = col.at("matrix").get<std::string>();
      char line[256];
      std::snprintf(line, sizeof(line),
                    "  %-9s initial_growth=%- 9.4g t_bound=%- 9.4g |X^c_i|=%- 9.4g |X^c_ij|=%- 9.4g "
                    "P_max=%- 9.4g\n",
                    name.c_str(), json_number(col, "initial_growth", NAN),
                    json_number(col, "t_bound", NAN), json_number(col, "gramian_control_norm", NAN),
                    json_number(col, "gramian_cross_norm", NAN), json_number(col, "p_max", NAN));
      text += line;
      const bool is_comb = name.find("comb") != std::string::npos;
      const double tb = json_number(col, "t_bound", 0.0);
      const double ig = json_number(col, "initial_growth", -1e300);
      if (is_comb) {
        comb_tb = std::max(comb_tb, tb);
        comb_ig = std::max(comb_ig, ig);
      } else {
        max_agent_tb = std::max(max_agent_tb, tb);
        max_agent_ig = std::max(max_agent_ig, ig);
      }
    }
    soft_checks.push_back({{"name", "combined T_bound >= per-agent T_bound"},
                           {"holds", comb_tb + 1e-9 >= max_agent_tb}});
    soft_checks.push_back({{"name", "combined initial growth >= per-agent initial growth"},
                           {"holds", comb_ig + 1e-9 >= max_agent_ig}});
    text += "\n";
  }

  const auto control_path = dir / (variant + "_control.json");
  if (std::filesystem::exists(control_path)) {
    const json control = read_json_file(control_path);
    report["control"] = control;
    have_any = true;
    const json& agg = control.at("aggregate");
    text += "Control comparison (means over converged initial conditions):\n";
    char line[256];
    std::snprintf(line, sizeof(line),
                  "  baseline=%.6g  optimum=%.6g  equilibrium=%.6g  eq-opt=%.3g  convergence=%.0f%%\n",
                  json_number(agg, "mean_baseline_total", NAN),
                  json_number(agg, "mean_optimum_total", NAN),
                  json_number(agg, "mean_equilibrium_total", NAN),
                  json_number(agg, "mean_eq_minus_opt", NAN),
                  100.0 * json_number(agg, "convergence_rate", 0.0));
    text += line;
    if (agg.contains("mean_optimum_total") && agg.contains("mean_equilibrium_total")) {
      soft_checks.push_back(
          {{"name", "mean optimum objective <= mean equilibrium objective"},
           {"holds", json_number(agg, "mean_optimum_total", 0.0) <=
                         json_number(agg, "mean_equilibrium_total", 0.0) + 1e-9}});
      soft_checks.push_back(
          {{"name", "mean optimum objective <= mean baseline objective"},
           {"holds", json_number(agg, "mean_optimum_total", 0.0) <=
                         json_number(agg, "mean_baseline_total", 0.0) + 1e-9}});
    }
    text += "\n";
  }

  if (!have_any)
    throw IoError("report: no fit, metrics, or control outputs found in " + config.output_dir);

  report["soft_checks"] = soft_checks;
  if (!soft_checks.empty()) {
    text += "Qualitative checks (reported, not asserted):\n";
    for (const auto& check : soft_checks)
      text += "  [" + std::string(check.at("holds").get<bool>() ? "holds " : "differs") + "] " +
              check.at("name").get<std::string>() + "\n";
  }

  write_json_file(dir / (variant + "_report.json"), report);
  write_text_file(dir / (variant + "_report.txt"), text);
  return report;
}

}  // namespace multikoop
