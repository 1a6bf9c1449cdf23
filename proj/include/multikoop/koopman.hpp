#pragma once

#include <map>
#include <string>
#include <vector>

#include "multikoop/dataset.hpp"
#include "multikoop/types.hpp"

namespace multikoop {

// Per-agent Koopman blocks. Flat models populate k_xx/k_xx_cross/k_xu.
// Hierarchical models have no direct control path in the slow dynamics
// (k_xu empty) and add the fast blocks; k_xw and k_wx stay zero when the
// benchmark's structural knowledge is applied.
struct AgentBlocks {
  MatrixXd k_xx;
  std::map<int, MatrixXd> k_xx_cross;  // j -> K_xx_ij
  MatrixXd k_xu;
  MatrixXd k_xy, k_xw;
  MatrixXd k_yy, k_yx, k_yu;
  MatrixXd k_ww, k_wx, k_wy, k_wu;
};

struct StructuredKoopman {
  Variant variant = Variant::flat;
  double rho_target = 0.999;
  DictionarySet dicts;
  std::vector<AgentBlocks> agents;

  int n_agents() const { return static_cast<int>(agents.size()); }

  void save(const std::string& path) const;
  static StructuredKoopman load(const std::string& path);
};

// Stacked slow-scale system: block (i,i) of `a` is the self block and
// (i,j) is (I - self_i) * cross_ij; `b` is block diagonal. offsets index the
// stacked lifted state / control per agent (size n_agents + 1).
struct CombinedSystem {
  MatrixXd a;
  MatrixXd b;
  std::vector<int> offset;
  std::vector<int> u_offset;

  int dim() const { return static_cast<int>(a.rows()); }
  int block_dim(int agent) const { return offset[agent + 1] - offset[agent]; }
  MatrixXd block(int i, int j) const {
    return a.block(offset[i], offset[j], block_dim(i), block_dim(j));
  }
};

// If rho(a) <= rho_target, returns a unchanged; otherwise scales a by
// rho_target / rho(a).
MatrixXd stability_project(const MatrixXd& a, double rho_target);

CombinedSystem assemble_combined(const StructuredKoopman& model);

// Iterates psi_{t+1} = A psi_t + B u_t; returns (steps+1) x dim, row 0 = psi0.
// `controls` may have steps rows, or 1 row (held), or 0 rows (u = 0).
MatrixXd predict(const CombinedSystem& sys, const VectorXd& psi0, const MatrixXd& controls, int steps);

// One per-agent slow step in the self-centered form K(psi - z) + z with
// z = sum of cross and control couplings. Flat variant only.
std::vector<VectorXd> step_structured(const StructuredKoopman& model,
                                      const std::vector<VectorXd>& psi_x,
                                      const std::vector<VectorXd>& psi_u);

// Hierarchical stepping pieces (slow observables pinned over the window).
// Fast substep: advances (psi_y, psi_w) one tau.
void hier_fast_substep(const StructuredKoopman& model, int agent, const VectorXd& psi_x,
                       const VectorXd& psi_u, VectorXd& psi_y, VectorXd& psi_w);
// Slow step from window-averaged fast observables.
VectorXd hier_slow_step(const StructuredKoopman& model, int agent,
                        const std::vector<VectorXd>& psi_x, const VectorXd& psi_y_bar,
                        const VectorXd& psi_w_bar);

}  // namespace multikoop
