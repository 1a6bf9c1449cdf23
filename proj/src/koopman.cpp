#include "multikoop/koopman.hpp"

#include "multikoop/json_io.hpp"
#include "multikoop/linalg.hpp"
#include "multikoop/matrix_archive.hpp"

namespace multikoop {

MatrixXd stability_project(const MatrixXd& a, double rho_target) {
  const double rho = spectral_radius(a);
  if (rho <= rho_target) return a;
  return a * (rho_target / rho);
}

CombinedSystem assemble_combined(const StructuredKoopman& model) {
  const int n = model.n_agents();
  CombinedSystem sys;
  sys.offset.assign(1, 0);
  sys.u_offset.assign(1, 0);
  for (int i = 0; i < n; ++i) {
    sys.offset.push_back(sys.offset.back() + static_cast<int>(model.agents[i].k_xx.rows()));
    sys.u_offset.push_back(sys.u_offset.back() + static_cast<int>(model.agents[i].k_xu.cols()));
  }
  const int dim = sys.offset.back();
  const int u_dim = sys.u_offset.back();
  sys.a = MatrixXd::Zero(dim, dim);
  sys.b = MatrixXd::Zero(dim, u_dim);
  for (int i = 0; i < n; ++i) {
    const auto& ag = model.agents[i];
    const int di = sys.block_dim(i);
    const MatrixXd gain = MatrixXd::Identity(di, di) - ag.k_xx;  // (I - K_ii)
    sys.a.block(sys.offset[i], sys.offset[i], di, di) = ag.k_xx;
    for (const auto& [j, k_ij] : ag.k_xx_cross) {
      if (k_ij.rows() != di || k_ij.cols() != sys.block_dim(j))
        throw DimensionError("assemble_combined: K_xx_" + std::to_string(i + 1) +
                             std::to_string(j + 1) + " has inconsistent dimensions");
      sys.a.block(sys.offset[i], sys.offset[j], di, sys.block_dim(j)) = gain * k_ij;
    }
    if (ag.k_xu.size() > 0) {
      if (ag.k_xu.rows() != di)
        throw DimensionError("assemble_combined: K_xu_" + std::to_string(i + 1) +
                             " has inconsistent row count");
      sys.b.block(sys.offset[i], sys.u_offset[i], di, ag.k_xu.cols()) = gain * ag.k_xu;
    }
  }
  return sys;
}

MatrixXd predict(const CombinedSystem& sys, const VectorXd& psi0, const MatrixXd& controls, int steps) {
  if (psi0.size() != sys.dim()) {
    throw DimensionError("predict: initial lifted state has length " + std::to_string(psi0.size()) +
                         ", expected " + std::to_string(sys.dim()));
  }
  MatrixXd traj(steps + 1, sys.dim());
  traj.row(0) = psi0;
  VectorXd psi = psi0;
  const int u_dim = static_cast<int>(sys.b.cols());
  for (int t = 0; t < steps; ++t) {
    VectorXd u = VectorXd::Zero(u_dim);
    if (controls.rows() == 1)
      u = controls.row(0);
    else if (controls.rows() > t)
      u = controls.row(t);
    psi = sys.a * psi + sys.b * u;
    traj.row(t + 1) = psi;
  }
  return traj;
}

std::vector<VectorXd> step_structured(const StructuredKoopman& model,
                                      const std::vector<VectorXd>& psi_x,
                                      const std::vector<VectorXd>& psi_u) {
  std::vector<VectorXd> next(model.n_agents());
  for (int i = 0; i < model.n_agents(); ++i) {
    const auto& ag = model.agents[i];
    VectorXd z = VectorXd::Zero(ag.k_xx.rows());
    for (const auto& [j, k_ij] : ag.k_xx_cross) z += k_ij * psi_x[j];
    if (ag.k_xu.size() > 0) z += ag.k_xu * psi_u[i];
    next[i] = ag.k_xx * (psi_x[i] - z) + z;
  }
  return next;
}

void hier_fast_substep(const StructuredKoopman& model, int agent, const VectorXd& psi_x,
                       const VectorXd& psi_u, VectorXd& psi_y, VectorXd& psi_w) {
  const auto& ag = model.agents[agent];
  const VectorXd zy = ag.k_yx * psi_x + ag.k_yu * psi_u;
  VectorXd zw = ag.k_wy * psi_y + ag.k_wu * psi_u;
  if (ag.k_wx.size() > 0) zw += ag.k_wx * psi_x;
  psi_w = ag.k_ww * (psi_w - zw) + zw;  // uses psi_y at the current substep
  psi_y = ag.k_yy * (psi_y - zy) + zy;
}

VectorXd hier_slow_step(const StructuredKoopman& model, int agent,
                        const std::vector<VectorXd>& psi_x, const VectorXd& psi_y_bar,
                        const VectorXd& psi_w_bar) {
  const auto& ag = model.agents[agent];
  VectorXd z = ag.k_xy * psi_y_bar;
  if (ag.k_xw.size() > 0) z += ag.k_xw * psi_w_bar;
  for (const auto& [j, k_ij] : ag.k_xx_cross) z += k_ij * psi_x[j];
  return ag.k_xx * (psi_x[agent] - z) + z;
}

namespace {

void add_if(MatrixArchive& ar, const std::string& name, const MatrixXd& m) {
  if (m.size() > 0) ar.add(name, m);
}

MatrixXd get_or_empty(const MatrixArchive& ar, const std::string& name) {
  return ar.has(name) ? ar.get(name) : MatrixXd();
}

}  // namespace

void StructuredKoopman::save(const std::string& path) const {
  MatrixArchive ar;
  ar.meta["format"] = "koopman-model";
  ar.meta["variant"] = to_string(variant);
  ar.meta["rho_target"] = rho_target;
  ar.meta["n_agents"] = n_agents();
  nlohmann::json dj;
  for (int a = 0; a < n_agents(); ++a) {
    dj["x"].push_back(to_json(dicts.x[a]));
    dj["u"].push_back(to_json(dicts.u[a]));
    if (variant == Variant::hier) {
      dj["y"].push_back(to_json(dicts.y[a]));
      dj["w"].push_back(to_json(dicts.w[a]));
    }
  }
  ar.meta["dictionaries"] = dj;
  for (int i = 0; i < n_agents(); ++i) {
    const std::string p = "agent" + std::to_string(i) + ".";
    const auto& ag = agents[i];
    ar.add(p + "k_xx", ag.k_xx);
    for (const auto& [j, k_ij] : ag.k_xx_cross) ar.add(p + "k_xx_cross" + std::to_string(j), k_ij);
    add_if(ar, p + "k_xu", ag.k_xu);
    add_if(ar, p + "k_xy", ag.k_xy);
    add_if(ar, p + "k_xw", ag.k_xw);
    add_if(ar, p + "k_yy", ag.k_yy);
    add_if(ar, p + "k_yx", ag.k_yx);
    add_if(ar, p + "k_yu", ag.k_yu);
    add_if(ar, p + "k_ww", ag.k_ww);
    add_if(ar, p + "k_wx", ag.k_wx);
    add_if(ar, p + "k_wy", ag.k_wy);
    add_if(ar, p + "k_wu", ag.k_wu);
  }
  ar.save(path);
}

StructuredKoopman StructuredKoopman::load(const std::string& path) {
  MatrixArchive ar = MatrixArchive::load(path);
  if (ar.meta.value("format", "") != "koopman-model")
    throw IoError("model load: " + path + " is not a koopman-model archive");
  StructuredKoopman model;
  model.variant = variant_from_string(ar.meta.at("variant").get<std::string>());
  model.rho_target = ar.meta.at("rho_target").get<double>();
  const int n = ar.meta.at("n_agents").get<int>();
  const auto& dj = ar.meta.at("dictionaries");
  model.dicts.variant = model.variant;
  for (int a = 0; a < n; ++a) {
    model.dicts.x.push_back(dictionary_from_json(dj.at("x").at(a)));
    model.dicts.u.push_back(dictionary_from_json(dj.at("u").at(a)));
    if (model.variant == Variant::hier) {
      model.dicts.y.push_back(dictionary_from_json(dj.at("y").at(a)));
      model.dicts.w.push_back(dictionary_from_json(dj.at("w").at(a)));
    }
  }
  model.agents.resize(n);
  for (int i = 0; i < n; ++i) {
    const std::string p = "agent" + std::to_string(i) + ".";
    auto& ag = model.agents[i];
    ag.k_xx = ar.get(p + "k_xx");
    for (int j = 0; j < n; ++j)
      if (ar.has(p + "k_xx_cross" + std::to_string(j)))
        ag.k_xx_cross[j] = ar.get(p + "k_xx_cross" + std::to_string(j));
    ag.k_xu = get_or_empty(ar, p + "k_xu");
    ag.k_xy = get_or_empty(ar, p + "k_xy");
    ag.k_xw = get_or_empty(ar, p + "k_xw");
    ag.k_yy = get_or_empty(ar, p + "k_yy");
    ag.k_yx = get_or_empty(ar, p + "k_yx");
    ag.k_yu = get_or_empty(ar, p + "k_yu");
    ag.k_ww = get_or_empty(ar, p + "k_ww");
    ag.k_wx = get_or_empty(ar, p + "k_wx");
    ag.k_wy = get_or_empty(ar, p + "k_wy");
    ag.k_wu = get_or_empty(ar, p + "k_wu");
  }
  return model;
}

}  // namespace multikoop
