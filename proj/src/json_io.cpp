#include "multikoop/json_io.hpp"

namespace multikoop {

using nlohmann::json;

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (long i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (long j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

MatrixXd matrix_from_json(const json& j) {
  MatrixXd m(j.at("rows").get<long>(), j.at("cols").get<long>());
  const auto& data = j.at("data");
  for (long i = 0; i < m.rows(); ++i)
    for (long c = 0; c < m.cols(); ++c) m(i, c) = data.at(i).at(c).get<double>();
  return m;
}

json to_json(const DictionarySpec& spec) {
  json j{{"raw_dim", spec.raw_dim},
         {"n_nonlinear", spec.n_nonlinear},
         {"kind", to_string(spec.kind)},
         {"bandwidth", spec.bandwidth},
         {"seed", spec.seed}};
  if (spec.kind == FeatureKind::gaussian_rbf)
    j["centers"] = matrix_to_json(spec.centers);
  else
    j["exponents"] = spec.exponents;
  return j;
}

DictionarySpec dictionary_from_json(const json& j) {
  DictionarySpec spec;
  spec.raw_dim = j.at("raw_dim").get<int>();
  spec.n_nonlinear = j.at("n_nonlinear").get<int>();
  spec.kind = feature_kind_from_string(j.at("kind").get<std::string>());
  spec.bandwidth = j.at("bandwidth").get<double>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  if (spec.kind == FeatureKind::gaussian_rbf)
    spec.centers = matrix_from_json(j.at("centers"));
  else
    spec.exponents = j.at("exponents").get<std::vector<std::vector<int>>>();
  return spec;
}

json to_json(const ScaleConfig& scale) { return json{{"dt_slow", scale.dt_slow}, {"m", scale.m}}; }

ScaleConfig scale_from_json(const json& j) {
  ScaleConfig s;
  s.dt_slow = j.at("dt_slow").get<double>();
  s.m = j.at("m").get<int>();
  s.validate();
  return s;
}

}  // namespace multikoop
