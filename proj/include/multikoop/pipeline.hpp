#pragma once

#include "multikoop/config.hpp"
#include "vendor/json.hpp"

namespace multikoop {

// One function per CLI subcommand. Each writes its artifacts into
// config.output_dir and returns the summary JSON it wrote.
nlohmann::json run_simulate(const ExperimentConfig& config);
nlohmann::json run_fit(const ExperimentConfig& config);
nlohmann::json run_analyze(const ExperimentConfig& config);
nlohmann::json run_control(const ExperimentConfig& config);
nlohmann::json run_report(const ExperimentConfig& config);

}  // namespace multikoop
