#include "multikoop/cost.hpp"

#include "multikoop/dictionary.hpp"

namespace multikoop {

double CostModel::eval(const VectorXd& psi, const VectorXd& u) const {
  return psi.dot(q_xx * psi) + 2.0 * psi.dot(q_xu * u) + u.dot(q_uu * u) + c_x.dot(psi) +
         c_u.dot(u) + c0;
}

CostModel build_cost(const StructuredKoopman& model, int agent, const ReducedModel* reduced) {
  const auto& dicts = model.dicts;
  const MatrixXd sx = state_selector(dicts.x[agent]);
  const long dx = dicts.x[agent].lifted_dim();
  const long du = dicts.u[agent].lifted_dim();

  CostModel cost;
  cost.c_x = VectorXd::Zero(dx);
  cost.c_u = VectorXd::Zero(du);

  if (model.variant == Variant::flat) {
    cost.q_xx = sx.transpose() * sx;
    cost.q_xu = MatrixXd::Zero(dx, du);
    cost.q_uu = MatrixXd::Identity(du, du);
    return cost;
  }

  if (reduced == nullptr)
    throw ConfigError("build_cost: hierarchical costs require the reduced model");
  const auto& r = reduced->agents[agent];
  const MatrixXd sy = state_selector(dicts.y[agent]);
  const MatrixXd sw = state_selector(dicts.w[agent]);
  const MatrixXd my_x = sy * r.b_yx;
  const MatrixXd my_u = sy * r.b_yu;
  const MatrixXd mw_x = sw * r.b_wx;
  const MatrixXd mw_u = sw * r.b_wu;
  cost.q_xx = sx.transpose() * sx + my_x.transpose() * my_x + mw_x.transpose() * mw_x;
  cost.q_xu = my_x.transpose() * my_u + mw_x.transpose() * mw_u;
  cost.q_uu = my_u.transpose() * my_u + mw_u.transpose() * mw_u;
  cost.q_xx = 0.5 * (cost.q_xx + cost.q_xx.transpose()).eval();
  cost.q_uu = 0.5 * (cost.q_uu + cost.q_uu.transpose()).eval();
  return cost;
}

std::vector<CostModel> build_costs(const StructuredKoopman& model, const ReducedModel* reduced) {
  std::vector<CostModel> costs;
  costs.reserve(model.n_agents());
  for (int i = 0; i < model.n_agents(); ++i) costs.push_back(build_cost(model, i, reduced));
  return costs;
}

}  // namespace multikoop
