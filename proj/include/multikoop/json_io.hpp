#pragma once

#include "vendor/json.hpp"

#include "multikoop/benchmark.hpp"
#include "multikoop/dictionary.hpp"

namespace multikoop {

nlohmann::json to_json(const DictionarySpec& spec);
DictionarySpec dictionary_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ScaleConfig& scale);
ScaleConfig scale_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const nlohmann::json& j);

}  // namespace multikoop
