#include <cstdint>
#include <iostream>
#include <string>

#include "multikoop/pipeline.hpp"
#include "vendor/CLI11.hpp"
#include "vendor/json.hpp"

namespace {

void print_error(const std::string& code, const std::string& message) {
  std::cerr << nlohmann::json{{"error", {{"code", code}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent Koopman operator toolkit: lift, fit, reduce, analyze, control"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string profile = "paper";
  std::uint64_t seed = 0;
  bool seed_given = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (partial overrides allowed)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Base RNG seed")->each([&](const std::string&) {
      seed_given = true;
    });
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--profile", profile, "Config profile")
        ->check(CLI::IsMember({"paper", "desk"}));
  };

  CLI::App* cmd_simulate =
      app.add_subcommand("simulate", "Integrate the benchmark and write CSV trajectories");
  CLI::App* cmd_fit =
      app.add_subcommand("fit", "Generate snapshots, fit the lifted model, report accuracy");
  CLI::App* cmd_analyze =
      app.add_subcommand("analyze", "Stability, transient-growth, and coupling metrics");
  CLI::App* cmd_control =
      app.add_subcommand("control", "Baseline vs optimum vs equilibrium over sampled ICs");
  CLI::App* cmd_report = app.add_subcommand("report", "Aggregate results with reference values");
  for (CLI::App* sub : {cmd_simulate, cmd_fit, cmd_analyze, cmd_control, cmd_report})
    add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& help) {
    return app.exit(help);
  } catch (const CLI::ParseError& err) {
    print_error("usage", err.what());
    return 2;
  }

  try {
    multikoop::ExperimentConfig config = multikoop::ExperimentConfig::load(config_path, profile);
    if (seed_given) config.seed = seed;
    if (!out_dir.empty()) config.output_dir = out_dir;
    config.validate();

    nlohmann::json summary;
    if (app.got_subcommand(cmd_simulate)) summary = multikoop::run_simulate(config);
    if (app.got_subcommand(cmd_fit)) summary = multikoop::run_fit(config);
    if (app.got_subcommand(cmd_analyze)) summary = multikoop::run_analyze(config);
    if (app.got_subcommand(cmd_control)) summary = multikoop::run_control(config);
    if (app.got_subcommand(cmd_report)) summary = multikoop::run_report(config);
    std::cout << summary.dump(2) << '\n';
    return 0;
  } catch (const multikoop::Error& err) {
    print_error(err.code(), err.what());
    return 1;
  } catch (const std::exception& err) {
    print_error("internal", err.what());
    return 1;
  }
}
