#pragma once

#include <vector>

#include "multikoop/cost.hpp"
#include "multikoop/koopman.hpp"
#include "multikoop/mcp.hpp"
#include "multikoop/reduction.hpp"
#include "vendor/json.hpp"

namespace multikoop {

// Finite-horizon lifted-quadratic game over the combined system
//   psi_{t+1} = A psi_t + B u_t,   t = 0..T-1
// with box bounds on the state-inclusive components of each agent block and
// on the controls. psi0 is fixed.
struct ControlProblem {
  int horizon = 50;
  CombinedSystem sys;
  std::vector<CostModel> costs;
  VectorXd psi0;
  std::vector<MatrixXd> selectors;  // per agent: raw components out of the lifted block
  VectorXd x_min, x_max;            // stacked over agents' raw components
  VectorXd u_min, u_max;            // stacked over agents' controls

  int n_agents() const { return static_cast<int>(sys.offset.size()) - 1; }
  void validate() const;
};

ControlProblem make_control_problem(const StructuredKoopman& model, const ReducedModel* reduced,
                                    const VectorXd& x0, int horizon, double x_lo, double x_hi,
                                    double u_lo, double u_hi);

// Variable and row indexing for the stacked game MCP. Per agent i:
// psi_{i,t} t=1..T and their stationarity rows, u_{i,t} t=0..T-1, dynamics
// multipliers lambda_{i,t} t=0..T-1, then bound multipliers.
struct McpLayout {
  int n_agents = 0;
  int horizon = 0;
  std::vector<long> dx, du, nb;  // per agent: lifted block, controls, bounded components
  std::vector<long> base_psi, base_u, base_lambda, base_mu_x_min, base_mu_x_max, base_mu_u_min,
      base_mu_u_max;
  long n_total = 0;

  long psi(int i, int t) const { return base_psi[i] + (t - 1) * dx[i]; }
  long u(int i, int t) const { return base_u[i] + t * du[i]; }
  long lambda(int i, int t) const { return base_lambda[i] + t * dx[i]; }
  long mu_x_min(int i, int t) const { return base_mu_x_min[i] + (t - 1) * nb[i]; }
  long mu_x_max(int i, int t) const { return base_mu_x_max[i] + (t - 1) * nb[i]; }
  long mu_u_min(int i, int t) const { return base_mu_u_min[i] + t * du[i]; }
  long mu_u_max(int i, int t) const { return base_mu_u_max[i] + t * du[i]; }
};

McpLayout make_layout(const ControlProblem& problem);

// One builder for both solution concepts: the social optimum couples agents
// through the rivals' adjoint blocks in the psi stationarity rows; dropping
// exactly those blocks yields the stacked per-agent Nash KKT systems.
AffineMcp build_control_mcp(const ControlProblem& problem, bool include_cross_coupling);
AffineMcp build_optimum_kkt(const ControlProblem& problem);
AffineMcp build_equilibrium_mcp(const ControlProblem& problem);

struct AgentSolution {
  MatrixXd psi;       // (T+1) x dx, first row is the initial lifted state
  MatrixXd u;         // T x du
  MatrixXd lambda;    // T x dx
  MatrixXd mu_x_min;  // T x nb (t = 1..T)
  MatrixXd mu_x_max;
  MatrixXd mu_u_min;  // T x du (t = 0..T-1)
  MatrixXd mu_u_max;
  double objective = 0.0;
  double rms_control = 0.0;
};

struct GameSolution {
  std::vector<AgentSolution> agents;
  double total_objective = 0.0;
  double fb_residual = 0.0;
  double stationarity_residual = 0.0;
  double complementarity_residual = 0.0;
  double feasibility_residual = 0.0;
  int iterations = 0;
  double wall_time_s = 0.0;
  bool converged = false;

  nlohmann::json to_json() const;
};

struct GameOptions {
  McpOptions mcp;
  bool cross_check = true;  // verify the optimum against projected gradient descent
};

GameSolution solve_optimum(const ControlProblem& problem, const GameOptions& options = {});
GameSolution solve_equilibrium(const ControlProblem& problem,
                               const GameSolution* warm_start = nullptr,
                               const GameOptions& options = {});

// Costs of the uncontrolled rollout, one entry per agent. No bounds enforced.
std::vector<double> baseline_rollout(const ControlProblem& problem);

}  // namespace multikoop
