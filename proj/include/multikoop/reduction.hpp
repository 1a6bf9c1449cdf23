#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "multikoop/koopman.hpp"

namespace multikoop {

// Slow-scale model obtained by pinning the fast observables at their fixed
// points. g[j] holds the cross block (I - K_xx_ii) K_xx_ij.
struct ReducedModel {
  struct AgentReduced {
    MatrixXd b_xx, b_xu;
    MatrixXd b_yx, b_yu;
    MatrixXd b_wx, b_wu;
    std::map<int, MatrixXd> g;
  };

  double rho_target = 0.999;
  DictionarySet dicts;
  std::vector<AgentReduced> agents;
  std::string source_hash;  // hash of the source model archive, when known

  int n_agents() const { return static_cast<int>(agents.size()); }

  void save(const std::string& path) const;
  static ReducedModel load(const std::string& path);
};

// Unique fixed point of the fast substep dynamics with the slow observables
// held: psi_y* = K_yx psi_x + K_yu psi_u, psi_w* = K_wx psi_x + K_wy psi_y*
// + K_wu psi_u. Requires sigma_min(I - K_yy) and (I - K_ww) above 1e-10.
std::pair<VectorXd, VectorXd> fast_fixed_point(const StructuredKoopman& model, int agent,
                                               const VectorXd& psi_x, const VectorXd& psi_u);

ReducedModel build_reduced(const StructuredKoopman& model);

// Stacked slow system built from the B blocks (diagonal B_xx_i, off-diagonal
// cross blocks, block-diagonal B_xu_i).
CombinedSystem assemble_combined(const ReducedModel& reduced);

struct ConsistencyReport {
  double max_average_deviation = 0.0;  // window-averaged fast observables vs fixed point
  double max_slow_deviation = 0.0;     // reduced slow step vs m-substep rollout slow step
  double max_deviation() const { return std::max(max_average_deviation, max_slow_deviation); }
};

// Runs the full model m fast substeps from the given fast initialization
// (fixed points when psi_y0/psi_w0 are empty), averages the fast observables
// over the window, takes the slow step, and compares against the reduced
// model's slow step.
ConsistencyReport consistency_check_at(const StructuredKoopman& model, const ReducedModel& reduced,
                                       int m, const std::vector<VectorXd>& psi_x,
                                       const std::vector<VectorXd>& psi_u,
                                       std::vector<VectorXd> psi_y0 = {},
                                       std::vector<VectorXd> psi_w0 = {});

// Same comparison over n_points random raw states and controls from
// [-1,1]^n, fast states initialized at their fixed points; reports the worst
// deviation found.
ConsistencyReport consistency_check(const StructuredKoopman& model, const ReducedModel& reduced,
                                    const ScaleConfig& scale, std::uint64_t seed = 0,
                                    int n_points = 10);

}  // namespace multikoop
