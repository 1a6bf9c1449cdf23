#pragma once

#include <vector>

#include "multikoop/koopman.hpp"
#include "multikoop/reduction.hpp"

namespace multikoop {

// Per-agent stage cost in lifted coordinates:
//   l(psi, u) = psi'Q_xx psi + 2 psi'Q_xu u + u'Q_uu u + c_x'psi + c_u'u + c0
struct CostModel {
  MatrixXd q_xx;
  MatrixXd q_xu;
  MatrixXd q_uu;
  VectorXd c_x;
  VectorXd c_u;
  double c0 = 0.0;

  double eval(const VectorXd& psi, const VectorXd& u) const;
};

// Exact lifted representation of the benchmark running costs. Flat uses the
// two state components plus the control effort term. The hierarchical cost
// scores the fast variables at their fixed points, so the control enters
// through the fixed-point maps and there is no explicit u^2 term.
CostModel build_cost(const StructuredKoopman& model, int agent, const ReducedModel* reduced = nullptr);
std::vector<CostModel> build_costs(const StructuredKoopman& model, const ReducedModel* reduced = nullptr);

}  // namespace multikoop
