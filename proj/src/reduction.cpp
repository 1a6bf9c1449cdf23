#include "multikoop/reduction.hpp"

#include "multikoop/json_io.hpp"
#include "multikoop/linalg.hpp"
#include "multikoop/matrix_archive.hpp"
#include "multikoop/rng.hpp"

namespace multikoop {

namespace {

constexpr double kInvertTol = 1e-10;

void require_invertible(const StructuredKoopman& model, int agent) {
  const auto& ag = model.agents[agent];
  const std::string who = "agent " + std::to_string(agent + 1);
  const double sy = smallest_singular_value(MatrixXd::Identity(ag.k_yy.rows(), ag.k_yy.cols()) - ag.k_yy);
  if (sy < kInvertTol)
    throw SingularityError(who + ": (I - K_yy) is near-singular (sigma_min = " + std::to_string(sy) +
                               "); the fast dynamics have no settled fixed point",
                           sy);
  const double sw = smallest_singular_value(MatrixXd::Identity(ag.k_ww.rows(), ag.k_ww.cols()) - ag.k_ww);
  if (sw < kInvertTol)
    throw SingularityError(who + ": (I - K_ww) is near-singular (sigma_min = " + std::to_string(sw) +
                               "); the fast dynamics have no settled fixed point",
                           sw);
}

}  // namespace

std::pair<VectorXd, VectorXd> fast_fixed_point(const StructuredKoopman& model, int agent,
                                               const VectorXd& psi_x, const VectorXd& psi_u) {
  if (model.variant != Variant::hier)
    throw ConfigError("fast_fixed_point: model has no fast dynamics");
  require_invertible(model, agent);
  const auto& ag = model.agents[agent];
  const VectorXd psi_y_star = ag.k_yx * psi_x + ag.k_yu * psi_u;
  VectorXd psi_w_star = ag.k_wy * psi_y_star + ag.k_wu * psi_u;
  if (ag.k_wx.size() > 0) psi_w_star += ag.k_wx * psi_x;
  return {psi_y_star, psi_w_star};
}

ReducedModel build_reduced(const StructuredKoopman& model) {
  if (model.variant != Variant::hier)
    throw ConfigError("build_reduced: model has no fast dynamics to reduce");
  ReducedModel reduced;
  reduced.rho_target = model.rho_target;
  reduced.dicts = model.dicts;
  reduced.agents.resize(model.n_agents());
  for (int i = 0; i < model.n_agents(); ++i) {
    require_invertible(model, i);
    const auto& ag = model.agents[i];
    auto& r = reduced.agents[i];
    const long dx = ag.k_xx.rows();
    const MatrixXd gain = MatrixXd::Identity(dx, dx) - ag.k_xx;
    r.b_yx = ag.k_yx;
    r.b_yu = ag.k_yu;
    r.b_wx = ag.k_wx + ag.k_wy * ag.k_yx;
    r.b_wu = ag.k_wu + ag.k_wy * ag.k_yu;
    r.b_xx = ag.k_xx + gain * (ag.k_xw * r.b_wx + ag.k_xy * r.b_yx);
    r.b_xu = gain * (ag.k_xw * r.b_wu + ag.k_xy * r.b_yu);
    for (const auto& [j, k_ij] : ag.k_xx_cross) r.g[j] = gain * k_ij;
  }
  return reduced;
}

CombinedSystem assemble_combined(const ReducedModel& reduced) {
  const int n = reduced.n_agents();
  CombinedSystem sys;
  sys.offset.assign(1, 0);
  sys.u_offset.assign(1, 0);
  for (int i = 0; i < n; ++i) {
    sys.offset.push_back(sys.offset.back() + static_cast<int>(reduced.agents[i].b_xx.rows()));
    sys.u_offset.push_back(sys.u_offset.back() + static_cast<int>(reduced.agents[i].b_xu.cols()));
  }
  sys.a = MatrixXd::Zero(sys.offset.back(), sys.offset.back());
  sys.b = MatrixXd::Zero(sys.offset.back(), sys.u_offset.back());
  for (int i = 0; i < n; ++i) {
    const auto& r = reduced.agents[i];
    sys.a.block(sys.offset[i], sys.offset[i], sys.block_dim(i), sys.block_dim(i)) = r.b_xx;
    for (const auto& [j, g_ij] : r.g)
      sys.a.block(sys.offset[i], sys.offset[j], sys.block_dim(i), sys.block_dim(j)) = g_ij;
    sys.b.block(sys.offset[i], sys.u_offset[i], sys.block_dim(i), r.b_xu.cols()) = r.b_xu;
  }
  return sys;
}

ConsistencyReport consistency_check_at(const StructuredKoopman& model, const ReducedModel& reduced,
                                       int m, const std::vector<VectorXd>& psi_x,
                                       const std::vector<VectorXd>& psi_u,
                                       std::vector<VectorXd> psi_y0, std::vector<VectorXd> psi_w0) {
  const int n = model.n_agents();
  std::vector<VectorXd> y_star(n), w_star(n);
  for (int i = 0; i < n; ++i) std::tie(y_star[i], w_star[i]) = fast_fixed_point(model, i, psi_x[i], psi_u[i]);
  if (psi_y0.empty()) psi_y0 = y_star;
  if (psi_w0.empty()) psi_w0 = w_star;

  ConsistencyReport report;
  for (int i = 0; i < n; ++i) {
    // m fast substeps, accumulating the window sums over n = 0..m-1.
    VectorXd y = psi_y0[i], w = psi_w0[i];
    VectorXd y_sum = VectorXd::Zero(y.size()), w_sum = VectorXd::Zero(w.size());
    for (int step = 0; step < m; ++step) {
      y_sum += y;
      w_sum += w;
      hier_fast_substep(model, i, psi_x[i], psi_u[i], y, w);
    }
    const VectorXd y_bar = y_sum / m;
    const VectorXd w_bar = w_sum / m;
    const double avg_dev = std::max((y_bar - y_star[i]).cwiseAbs().maxCoeff(),
                                    (w_bar - w_star[i]).cwiseAbs().maxCoeff());
    report.max_average_deviation = std::max(report.max_average_deviation, avg_dev);

    const VectorXd full_step = hier_slow_step(model, i, psi_x, y_bar, w_bar);
    const auto& r = reduced.agents[i];
    VectorXd reduced_step = r.b_xx * psi_x[i] + r.b_xu * psi_u[i];
    for (const auto& [j, g_ij] : r.g) reduced_step += g_ij * psi_x[j];
    const double slow_dev = (full_step - reduced_step).cwiseAbs().maxCoeff();
    report.max_slow_deviation = std::max(report.max_slow_deviation, slow_dev);
  }
  return report;
}

ConsistencyReport consistency_check(const StructuredKoopman& model, const ReducedModel& reduced,
                                    const ScaleConfig& scale, std::uint64_t seed, int n_points) {
  Rng rng(Rng::derive(seed, 0x436f6e73ULL));
  ConsistencyReport worst;
  for (int k = 0; k < n_points; ++k) {
    std::vector<VectorXd> psi_x, psi_u;
    for (int i = 0; i < model.n_agents(); ++i) {
      VectorXd x(model.dicts.x[i].raw_dim), u(model.dicts.u[i].raw_dim);
      for (long d = 0; d < x.size(); ++d) x[d] = rng.uniform(-1.0, 1.0);
      for (long d = 0; d < u.size(); ++d) u[d] = rng.uniform(-1.0, 1.0);
      psi_x.push_back(lift(model.dicts.x[i], x));
      psi_u.push_back(lift(model.dicts.u[i], u));
    }
    const ConsistencyReport r = consistency_check_at(model, reduced, scale.m, psi_x, psi_u);
    worst.max_average_deviation = std::max(worst.max_average_deviation, r.max_average_deviation);
    worst.max_slow_deviation = std::max(worst.max_slow_deviation, r.max_slow_deviation);
  }
  return worst;
}

void ReducedModel::save(const std::string& path) const {
  MatrixArchive ar;
  ar.meta["format"] = "reduced-model";
  ar.meta["rho_target"] = rho_target;
  ar.meta["n_agents"] = n_agents();
  ar.meta["source_hash"] = source_hash;
  nlohmann::json dj;
  for (int a = 0; a < n_agents(); ++a) {
    dj["x"].push_back(to_json(dicts.x[a]));
    dj["u"].push_back(to_json(dicts.u[a]));
    dj["y"].push_back(to_json(dicts.y[a]));
    dj["w"].push_back(to_json(dicts.w[a]));
  }
  ar.meta["dictionaries"] = dj;
  for (int i = 0; i < n_agents(); ++i) {
    const std::string p = "agent" + std::to_string(i) + ".";
    const auto& r = agents[i];
    ar.add(p + "b_xx", r.b_xx);
    ar.add(p + "b_xu", r.b_xu);
    ar.add(p + "b_yx", r.b_yx);
    ar.add(p + "b_yu", r.b_yu);
    ar.add(p + "b_wx", r.b_wx);
    ar.add(p + "b_wu", r.b_wu);
    for (const auto& [j, g_ij] : r.g) ar.add(p + "g" + std::to_string(j), g_ij);
  }
  ar.save(path);
}

ReducedModel ReducedModel::load(const std::string& path) {
  MatrixArchive ar = MatrixArchive::load(path);
  if (ar.meta.value("format", "") != "reduced-model")
    throw IoError("reduced load: " + path + " is not a reduced-model archive");
  ReducedModel reduced;
  reduced.rho_target = ar.meta.at("rho_target").get<double>();
  reduced.source_hash = ar.meta.value("source_hash", "");
  const int n = ar.meta.at("n_agents").get<int>();
  const auto& dj = ar.meta.at("dictionaries");
  reduced.dicts.variant = Variant::hier;
  for (int a = 0; a < n; ++a) {
    reduced.dicts.x.push_back(dictionary_from_json(dj.at("x").at(a)));
    reduced.dicts.u.push_back(dictionary_from_json(dj.at("u").at(a)));
    reduced.dicts.y.push_back(dictionary_from_json(dj.at("y").at(a)));
    reduced.dicts.w.push_back(dictionary_from_json(dj.at("w").at(a)));
  }
  reduced.agents.resize(n);
  for (int i = 0; i < n; ++i) {
    const std::string p = "agent" + std::to_string(i) + ".";
    auto& r = reduced.agents[i];
    r.b_xx = ar.get(p + "b_xx");
    r.b_xu = ar.get(p + "b_xu");
    r.b_yx = ar.get(p + "b_yx");
    r.b_yu = ar.get(p + "b_yu");
    r.b_wx = ar.get(p + "b_wx");
    r.b_wu = ar.get(p + "b_wu");
    for (int j = 0; j < n; ++j)
      if (ar.has(p + "g" + std::to_string(j))) r.g[j] = ar.get(p + "g" + std::to_string(j));
  }
  return reduced;
}

}  // namespace multikoop
