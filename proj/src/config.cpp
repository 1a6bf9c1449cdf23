#include "multikoop/config.hpp"

#include <fstream>

namespace multikoop {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!j.is_object()) throw ConfigError("config: " + where + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known) throw ConfigError("config: unknown key \"" + item.key() + "\" in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void ExperimentConfig::validate() const {
  scale.validate();
  if (dictionary.n_x_features < 0 || dictionary.n_y_features < 0 || dictionary.n_w_features < 0)
    throw ConfigError("config: dictionary feature counts must be >= 0");
  if (dictionary.bandwidth <= 0.0) throw ConfigError("config: dictionary.bandwidth must be > 0");
  if (training.n_ic < 1) throw ConfigError("config: training.n_ic must be >= 1");
  if (training.ridge < 0.0) throw ConfigError("config: training.ridge must be >= 0");
  if (training.rho_target <= 0.0 || training.rho_target > 1.0)
    throw ConfigError("config: training.rho_target must be in (0, 1]");
  if (evaluation.n_trajectories < 1 || evaluation.n_steps < 1)
    throw ConfigError("config: evaluation counts must be >= 1");
  if (control.horizon < 1 || control.n_ic < 1 || control.max_iterations < 1)
    throw ConfigError("config: control counts must be >= 1");
  if (control.ic_box <= 0.0) throw ConfigError("config: control.ic_box must be > 0");
  if (control.x_min >= control.x_max || control.u_min >= control.u_max)
    throw ConfigError("config: control bounds must satisfy min < max");
  if (simulate.n_ic < 1 || simulate.n_steps < 1)
    throw ConfigError("config: simulate counts must be >= 1");
  if (simulate.ic_box <= 0.0) throw ConfigError("config: simulate.ic_box must be > 0");
  if (output_dir.empty()) throw ConfigError("config: output_dir must not be empty");
}

nlohmann::json ExperimentConfig::to_json() const {
  return json{
      {"variant", to_string(variant)},
      {"seed", seed},
      {"output_dir", output_dir},
      {"dictionary",
       {{"n_x_features", dictionary.n_x_features},
        {"n_y_features", dictionary.n_y_features},
        {"n_w_features", dictionary.n_w_features},
        {"bandwidth", dictionary.bandwidth}}},
      {"scale", {{"dt_slow", scale.dt_slow}, {"m", scale.m}}},
      {"training",
       {{"n_ic", training.n_ic},
        {"ridge", training.ridge},
        {"rho_target", training.rho_target},
        {"zero_xw_blocks", training.zero_xw_blocks}}},
      {"evaluation",
       {{"n_trajectories", evaluation.n_trajectories}, {"n_steps", evaluation.n_steps}}},
      {"control",
       {{"horizon", control.horizon},
        {"n_ic", control.n_ic},
        {"ic_box", control.ic_box},
        {"x_min", control.x_min},
        {"x_max", control.x_max},
        {"u_min", control.u_min},
        {"u_max", control.u_max},
        {"warm_start", control.warm_start},
        {"max_iterations", control.max_iterations}}},
      {"simulate",
       {{"n_ic", simulate.n_ic}, {"n_steps", simulate.n_steps}, {"ic_box", simulate.ic_box}}}};
}

void ExperimentConfig::apply_json(const nlohmann::json& overrides) try {
  check_keys(overrides,
             {"variant", "seed", "output_dir", "dictionary", "scale", "training", "evaluation",
              "control", "simulate"},
             "top level");
  if (overrides.contains("variant"))
    variant = variant_from_string(overrides.at("variant").get<std::string>());
  read(overrides, "seed", seed);
  read(overrides, "output_dir", output_dir);
  if (overrides.contains("dictionary")) {
    const json& j = overrides.at("dictionary");
    check_keys(j, {"n_x_features", "n_y_features", "n_w_features", "bandwidth"}, "dictionary");
    read(j, "n_x_features", dictionary.n_x_features);
    read(j, "n_y_features", dictionary.n_y_features);
    read(j, "n_w_features", dictionary.n_w_features);
    read(j, "bandwidth", dictionary.bandwidth);
  }
  if (overrides.contains("scale")) {
    const json& j = overrides.at("scale");
    check_keys(j, {"dt_slow", "m"}, "scale");
    read(j, "dt_slow", scale.dt_slow);
    read(j, "m", scale.m);
  }
  if (overrides.contains("training")) {
    const json& j = overrides.at("training");
    check_keys(j, {"n_ic", "ridge", "rho_target", "zero_xw_blocks"}, "training");
    read(j, "n_ic", training.n_ic);
    read(j, "ridge", training.ridge);
    read(j, "rho_target", training.rho_target);
    read(j, "zero_xw_blocks", training.zero_xw_blocks);
  }
  if (overrides.contains("evaluation")) {
    const json& j = overrides.at("evaluation");
    check_keys(j, {"n_trajectories", "n_steps"}, "evaluation");
    read(j, "n_trajectories", evaluation.n_trajectories);
    read(j, "n_steps", evaluation.n_steps);
  }
  if (overrides.contains("control")) {
    const json& j = overrides.at("control");
    check_keys(j,
               {"horizon", "n_ic", "ic_box", "x_min", "x_max", "u_min", "u_max", "warm_start",
                "max_iterations"},
               "control");
    read(j, "horizon", control.horizon);
    read(j, "n_ic", control.n_ic);
    read(j, "ic_box", control.ic_box);
    read(j, "x_min", control.x_min);
    read(j, "x_max", control.x_max);
    read(j, "u_min", control.u_min);
    read(j, "u_max", control.u_max);
    read(j, "warm_start", control.warm_start);
    read(j, "max_iterations", control.max_iterations);
  }
  if (overrides.contains("simulate")) {
    const json& j = overrides.at("simulate");
    check_keys(j, {"n_ic", "n_steps", "ic_box"}, "simulate");
    read(j, "n_ic", simulate.n_ic);
    read(j, "n_steps", simulate.n_steps);
    read(j, "ic_box", simulate.ic_box);
  }
} catch (const Error&) {
  throw;
} catch (const std::exception& e) {
  throw ConfigError(std::string("config: ") + e.what());
}

ExperimentConfig ExperimentConfig::with_profile(const std::string& profile) {
  ExperimentConfig config;
  if (profile == "paper") return config;
  if (profile == "desk") {
    config.training.n_ic = 2000;
    config.control.n_ic = 20;
    config.control.ic_box = 0.7;
    return config;
  }
  throw ConfigError("config: unknown profile \"" + profile + "\" (expected paper or desk)");
}

ExperimentConfig ExperimentConfig::load(const std::string& path, const std::string& profile) {
  ExperimentConfig config = with_profile(profile);
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& err) {
      throw ConfigError("config: " + path + " is not valid JSON: " + err.what());
    }
    config.apply_json(j);
  }
  return config;
}

}  // namespace multikoop
