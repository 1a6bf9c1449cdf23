#pragma once

#include <cstdint>
#include <string>

#include "multikoop/benchmark.hpp"
#include "multikoop/types.hpp"
#include "vendor/json.hpp"

namespace multikoop {

struct DictionaryConfig {
  int n_x_features = 12;
  int n_y_features = 12;
  int n_w_features = 4;
  double bandwidth = 1.0;
};

struct TrainingConfig {
  int n_ic = 10000;
  double ridge = 1e-8;
  double rho_target = 0.999;
  bool zero_xw_blocks = true;
};

struct EvaluationConfig {
  int n_trajectories = 100;
  int n_steps = 100;
};

struct ControlConfig {
  int horizon = 50;
  int n_ic = 100;
  double ic_box = 1.0;
  double x_min = -1.0;
  double x_max = 1.0;
  double u_min = -1.0;
  double u_max = 1.0;
  bool warm_start = true;
  int max_iterations = 500;
};

struct SimulateConfig {
  int n_ic = 1;
  int n_steps = 100;
  double ic_box = 1.0;
};

// Full experiment description. Defaults reproduce the reference protocol
// (1e4 training ICs, dt 0.1, m=100, +-1 bounds); the desk profile shrinks
// the expensive counts so the pipeline finishes in minutes.
struct ExperimentConfig {
  Variant variant = Variant::flat;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  DictionaryConfig dictionary;
  ScaleConfig scale;
  TrainingConfig training;
  EvaluationConfig evaluation;
  ControlConfig control;
  SimulateConfig simulate;

  void validate() const;
  nlohmann::json to_json() const;
  void apply_json(const nlohmann::json& overrides);  // partial, unknown keys rejected

  static ExperimentConfig with_profile(const std::string& profile);  // "paper" | "desk"
  static ExperimentConfig load(const std::string& path, const std::string& profile);
};

}  // namespace multikoop
