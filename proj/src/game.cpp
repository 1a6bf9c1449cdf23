#include "multikoop/game.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "multikoop/dictionary.hpp"
#include "multikoop/rng.hpp"

namespace multikoop {

namespace {

long agent_du(const CombinedSystem& sys, int i) { return sys.u_offset[i + 1] - sys.u_offset[i]; }

MatrixXd agent_b(const CombinedSystem& sys, int i) {
  return sys.b.block(sys.offset[i], sys.u_offset[i], sys.block_dim(i), agent_du(sys, i));
}

void add_block(std::vector<Eigen::Triplet<double>>& trips, long row0, long col0,
               const MatrixXd& block, double scale = 1.0) {
  for (long c = 0; c < block.cols(); ++c)
    for (long r = 0; r < block.rows(); ++r) {
      const double v = scale * block(r, c);
      if (v != 0.0) trips.emplace_back(row0 + r, col0 + c, v);
    }
}

void add_identity(std::vector<Eigen::Triplet<double>>& trips, long row0, long col0, long n,
                  double scale) {
  for (long r = 0; r < n; ++r) trips.emplace_back(row0 + r, col0 + r, scale);
}

}  // namespace

void ControlProblem::validate() const {
  const int n = n_agents();
  if (horizon < 1) throw ConfigError("ControlProblem: horizon must be >= 1");
  if (psi0.size() != sys.dim()) throw DimensionError("ControlProblem: psi0 size mismatch");
  if (static_cast<int>(costs.size()) != n || static_cast<int>(selectors.size()) != n)
    throw DimensionError("ControlProblem: per-agent costs and selectors required");
  if (sys.b.cols() <= 0) throw ConfigError("ControlProblem: combined system has no control input");
  long nb_total = 0;
  for (int i = 0; i < n; ++i) {
    const long dx = sys.block_dim(i);
    const long du = agent_du(sys, i);
    if (selectors[i].cols() != dx) throw DimensionError("ControlProblem: selector width mismatch");
    if (costs[i].q_xx.rows() != dx || costs[i].q_xx.cols() != dx ||
        costs[i].q_xu.rows() != dx || costs[i].q_xu.cols() != du ||
        costs[i].q_uu.rows() != du || costs[i].q_uu.cols() != du ||
        costs[i].c_x.size() != dx || costs[i].c_u.size() != du)
      throw DimensionError("ControlProblem: cost dimensions mismatch for agent " +
                           std::to_string(i + 1));
    nb_total += selectors[i].rows();
  }
  if (x_min.size() != nb_total || x_max.size() != nb_total)
    throw DimensionError("ControlProblem: state bound vectors must cover all raw components");
  if (u_min.size() != sys.b.cols() || u_max.size() != sys.b.cols())
    throw DimensionError("ControlProblem: control bound vectors must cover all controls");
  if ((x_max - x_min).minCoeff() < 0.0 || (u_max - u_min).minCoeff() < 0.0)
    throw ConfigError("ControlProblem: lower bounds exceed upper bounds");
}

ControlProblem make_control_problem(const StructuredKoopman& model, const ReducedModel* reduced,
                                    const VectorXd& x0, int horizon, double x_lo, double x_hi,
                                    double u_lo, double u_hi) {
  ControlProblem problem;
  problem.horizon = horizon;
  if (model.variant == Variant::hier) {
    if (reduced == nullptr)
      throw ConfigError("make_control_problem: hierarchical control uses the reduced model");
    problem.sys = assemble_combined(*reduced);
  } else {
    problem.sys = assemble_combined(model);
  }
  problem.costs = build_costs(model, reduced);
  const int n = model.n_agents();
  problem.psi0 = VectorXd::Zero(problem.sys.dim());
  long raw_total = 0;
  long raw_off = 0;
  for (int i = 0; i < n; ++i) raw_total += model.dicts.x[i].raw_dim;
  if (x0.size() != raw_total)
    throw DimensionError("make_control_problem: initial state must stack all agents' slow states");
  for (int i = 0; i < n; ++i) {
    const auto& spec = model.dicts.x[i];
    problem.psi0.segment(problem.sys.offset[i], spec.lifted_dim()) =
        lift(spec, x0.segment(raw_off, spec.raw_dim));
    problem.selectors.push_back(state_selector(spec));
    raw_off += spec.raw_dim;
  }
  problem.x_min = VectorXd::Constant(raw_total, x_lo);
  problem.x_max = VectorXd::Constant(raw_total, x_hi);
  problem.u_min = VectorXd::Constant(problem.sys.b.cols(), u_lo);
  problem.u_max = VectorXd::Constant(problem.sys.b.cols(), u_hi);
  problem.validate();
  return problem;
}

McpLayout make_layout(const ControlProblem& problem) {
  McpLayout layout;
  layout.n_agents = problem.n_agents();
  layout.horizon = problem.horizon;
  for (int i = 0; i < layout.n_agents; ++i) {
    layout.dx.push_back(problem.sys.block_dim(i));
    layout.du.push_back(agent_du(problem.sys, i));
    layout.nb.push_back(problem.selectors[i].rows());
  }
  const long t = problem.horizon;
  long off = 0;
  const auto claim = [&](std::vector<long>& base, const std::vector<long>& dims) {
    for (int i = 0; i < layout.n_agents; ++i) {
      base.push_back(off);
      off += t * dims[i];
    }
  };
  claim(layout.base_psi, layout.dx);
  claim(layout.base_u, layout.du);
  claim(layout.base_lambda, layout.dx);
  claim(layout.base_mu_x_min, layout.nb);
  claim(layout.base_mu_x_max, layout.nb);
  claim(layout.base_mu_u_min, layout.du);
  claim(layout.base_mu_u_max, layout.du);
  layout.n_total = off;
  return layout;
}

AffineMcp build_control_mcp(const ControlProblem& problem, bool include_cross_coupling) {
  problem.validate();
  const McpLayout layout = make_layout(problem);
  const int n = layout.n_agents;
  const int t_end = problem.horizon;
  const CombinedSystem& sys = problem.sys;

  AffineMcp mcp;
  mcp.q = VectorXd::Zero(layout.n_total);
  mcp.is_complementarity.assign(layout.n_total, false);
  std::vector<Eigen::Triplet<double>> trips;

  std::vector<long> raw_off(n, 0), u_bound_off(n, 0);
  for (int i = 1; i < n; ++i) {
    raw_off[i] = raw_off[i - 1] + layout.nb[i - 1];
    u_bound_off[i] = u_bound_off[i - 1] + layout.du[i - 1];
  }

  for (int i = 0; i < n; ++i) {
    const CostModel& cost = problem.costs[i];
    const MatrixXd a_ii = sys.block(i, i);
    const MatrixXd b_i = agent_b(sys, i);
    const MatrixXd& s_i = problem.selectors[i];
    const VectorXd psi0_i = problem.psi0.segment(sys.offset[i], layout.dx[i]);
    const VectorXd xlo = problem.x_min.segment(raw_off[i], layout.nb[i]);
    const VectorXd xhi = problem.x_max.segment(raw_off[i], layout.nb[i]);
    const VectorXd ulo = problem.u_min.segment(u_bound_off[i], layout.du[i]);
    const VectorXd uhi = problem.u_max.segment(u_bound_off[i], layout.du[i]);

    // Stationarity in psi_{i,t}, t = 1..T. The terminal state carries no
    // stage cost; it appears only through the last dynamics row and bounds.
    for (int t = 1; t <= t_end; ++t) {
      const long row = layout.psi(i, t);
      if (t <= t_end - 1) {
        add_block(trips, row, layout.psi(i, t), cost.q_xx, 2.0);
        add_block(trips, row, layout.u(i, t), cost.q_xu, 2.0);
        mcp.q.segment(row, layout.dx[i]) += cost.c_x;
        add_block(trips, row, layout.lambda(i, t), a_ii.transpose());
        if (include_cross_coupling) {
          for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            add_block(trips, row, layout.lambda(j, t), sys.block(j, i).transpose());
          }
        }
      }
      add_identity(trips, row, layout.lambda(i, t - 1), layout.dx[i], -1.0);
      add_block(trips, row, layout.mu_x_max(i, t), s_i.transpose());
      add_block(trips, row, layout.mu_x_min(i, t), s_i.transpose(), -1.0);
    }

    // Stationarity in u_{i,t}, t = 0..T-1.
    for (int t = 0; t < t_end; ++t) {
      const long row = layout.u(i, t);
      add_block(trips, row, layout.u(i, t), cost.q_uu, 2.0);
      if (t >= 1)
        add_block(trips, row, layout.psi(i, t), cost.q_xu.transpose(), 2.0);
      else
        mcp.q.segment(row, layout.du[i]) += 2.0 * cost.q_xu.transpose() * psi0_i;
      mcp.q.segment(row, layout.du[i]) += cost.c_u;
      add_block(trips, row, layout.lambda(i, t), b_i.transpose());
      add_identity(trips, row, layout.mu_u_max(i, t), layout.du[i], 1.0);
      add_identity(trips, row, layout.mu_u_min(i, t), layout.du[i], -1.0);
    }

    // Dynamics rows paired with lambda_{i,t}:
    //   A_ii psi_{i,t} + sum_j G_ij psi_{j,t} + B_i u_{i,t} - psi_{i,t+1} = 0
    for (int t = 0; t < t_end; ++t) {
      const long row = layout.lambda(i, t);
      if (t >= 1) {
        add_block(trips, row, layout.psi(i, t), a_ii);
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          add_block(trips, row, layout.psi(j, t), sys.block(i, j));
        }
      } else {
        VectorXd rhs = a_ii * psi0_i;
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          rhs += sys.block(i, j) * problem.psi0.segment(sys.offset[j], layout.dx[j]);
        }
        mcp.q.segment(row, layout.dx[i]) += rhs;
      }
      add_block(trips, row, layout.u(i, t), b_i);
      add_identity(trips, row, layout.psi(i, t + 1), layout.dx[i], -1.0);
    }

    // Box complementarities on the raw components of psi (t = 1..T) and on
    // the controls (t = 0..T-1).
    for (int t = 1; t <= t_end; ++t) {
      long row = layout.mu_x_min(i, t);
      add_block(trips, row, layout.psi(i, t), s_i);
      mcp.q.segment(row, layout.nb[i]) -= xlo;
      for (long k = 0; k < layout.nb[i]; ++k) mcp.is_complementarity[row + k] = true;
      row = layout.mu_x_max(i, t);
      add_block(trips, row, layout.psi(i, t), s_i, -1.0);
      mcp.q.segment(row, layout.nb[i]) += xhi;
      for (long k = 0; k < layout.nb[i]; ++k) mcp.is_complementarity[row + k] = true;
    }
    for (int t = 0; t < t_end; ++t) {
      long row = layout.mu_u_min(i, t);
      add_identity(trips, row, layout.u(i, t), layout.du[i], 1.0);
      mcp.q.segment(row, layout.du[i]) -= ulo;
      for (long k = 0; k < layout.du[i]; ++k) mcp.is_complementarity[row + k] = true;
      row = layout.mu_u_max(i, t);
      add_identity(trips, row, layout.u(i, t), layout.du[i], -1.0);
      mcp.q.segment(row, layout.du[i]) += uhi;
      for (long k = 0; k < layout.du[i]; ++k) mcp.is_complementarity[row + k] = true;
    }
  }

  mcp.m.resize(layout.n_total, layout.n_total);
  mcp.m.setFromTriplets(trips.begin(), trips.end());
  mcp.m.makeCompressed();
  return mcp;
}

AffineMcp build_optimum_kkt(const ControlProblem& problem) {
  return build_control_mcp(problem, true);
}

AffineMcp build_equilibrium_mcp(const ControlProblem& problem) {
  return build_control_mcp(problem, false);
}

namespace {

VectorXd cold_start(const ControlProblem& problem, const McpLayout& layout) {
  VectorXd z = VectorXd::Zero(layout.n_total);
  VectorXd psi = problem.psi0;
  for (int t = 1; t <= problem.horizon; ++t) {
    psi = problem.sys.a * psi;
    for (int i = 0; i < layout.n_agents; ++i)
      z.segment(layout.psi(i, t), layout.dx[i]) = psi.segment(problem.sys.offset[i], layout.dx[i]);
  }
  return z;
}

VectorXd warm_start_point(const ControlProblem& problem, const McpLayout& layout,
                          const GameSolution& warm) {
  if (static_cast<int>(warm.agents.size()) != layout.n_agents)
    throw DimensionError("solve_equilibrium: warm start agent count mismatch");
  VectorXd z = VectorXd::Zero(layout.n_total);
  for (int i = 0; i < layout.n_agents; ++i) {
    const AgentSolution& ag = warm.agents[i];
    if (ag.psi.cols() != layout.dx[i] || ag.psi.rows() != problem.horizon + 1 ||
        ag.u.cols() != layout.du[i] || ag.u.rows() != problem.horizon)
      throw DimensionError("solve_equilibrium: warm start trajectory shape mismatch");
    for (int t = 1; t <= problem.horizon; ++t)
      z.segment(layout.psi(i, t), layout.dx[i]) = ag.psi.row(t).transpose();
    for (int t = 0; t < problem.horizon; ++t) {
      z.segment(layout.u(i, t), layout.du[i]) = ag.u.row(t).transpose();
      z.segment(layout.lambda(i, t), layout.dx[i]) = ag.lambda.row(t).transpose();
      z.segment(layout.mu_u_min(i, t), layout.du[i]) = ag.mu_u_min.row(t).transpose();
      z.segment(layout.mu_u_max(i, t), layout.du[i]) = ag.mu_u_max.row(t).transpose();
    }
    for (int t = 1; t <= problem.horizon; ++t) {
      z.segment(layout.mu_x_min(i, t), layout.nb[i]) = ag.mu_x_min.row(t - 1).transpose();
      z.segment(layout.mu_x_max(i, t), layout.nb[i]) = ag.mu_x_max.row(t - 1).transpose();
    }
  }
  return z;
}

GameSolution extract_solution(const ControlProblem& problem, const McpLayout& layout,
                              const AffineMcp& mcp, const McpResult& res, double wall_time_s) {
  GameSolution sol;
  sol.fb_residual = res.residual;
  sol.iterations = res.iterations;
  sol.converged = res.converged;
  sol.wall_time_s = wall_time_s;

  const VectorXd w = mcp.m * res.z + mcp.q;
  const int t_end = problem.horizon;
  for (int i = 0; i < layout.n_agents; ++i) {
    AgentSolution ag;
    ag.psi.resize(t_end + 1, layout.dx[i]);
    ag.psi.row(0) = problem.psi0.segment(problem.sys.offset[i], layout.dx[i]).transpose();
    for (int t = 1; t <= t_end; ++t)
      ag.psi.row(t) = res.z.segment(layout.psi(i, t), layout.dx[i]).transpose();
    ag.u.resize(t_end, layout.du[i]);
    ag.lambda.resize(t_end, layout.dx[i]);
    ag.mu_u_min.resize(t_end, layout.du[i]);
    ag.mu_u_max.resize(t_end, layout.du[i]);
    ag.mu_x_min.resize(t_end, layout.nb[i]);
    ag.mu_x_max.resize(t_end, layout.nb[i]);
    for (int t = 0; t < t_end; ++t) {
      ag.u.row(t) = res.z.segment(layout.u(i, t), layout.du[i]).transpose();
      ag.lambda.row(t) = res.z.segment(layout.lambda(i, t), layout.dx[i]).transpose();
      ag.mu_u_min.row(t) = res.z.segment(layout.mu_u_min(i, t), layout.du[i]).transpose();
      ag.mu_u_max.row(t) = res.z.segment(layout.mu_u_max(i, t), layout.du[i]).transpose();
    }
    for (int t = 1; t <= t_end; ++t) {
      ag.mu_x_min.row(t - 1) = res.z.segment(layout.mu_x_min(i, t), layout.nb[i]).transpose();
      ag.mu_x_max.row(t - 1) = res.z.segment(layout.mu_x_max(i, t), layout.nb[i]).transpose();
    }
    for (int t = 0; t < t_end; ++t)
      ag.objective += problem.costs[i].eval(ag.psi.row(t).transpose(), ag.u.row(t).transpose());
    ag.rms_control = std::sqrt(ag.u.squaredNorm() / static_cast<double>(ag.u.size()));
    sol.total_objective += ag.objective;
    sol.agents.push_back(std::move(ag));
  }

  for (long r = 0; r < mcp.size(); ++r) {
    if (mcp.is_complementarity[r]) {
      sol.complementarity_residual = std::max(
          {sol.complementarity_residual, std::abs(res.z[r] * w[r]), -res.z[r]});
      sol.feasibility_residual = std::max(sol.feasibility_residual, -w[r]);
    }
  }
  for (int i = 0; i < layout.n_agents; ++i) {
    for (int t = 1; t <= t_end; ++t) {
      const auto seg = w.segment(layout.psi(i, t), layout.dx[i]);
      sol.stationarity_residual = std::max(sol.stationarity_residual, seg.cwiseAbs().maxCoeff());
    }
    for (int t = 0; t < t_end; ++t) {
      const auto useg = w.segment(layout.u(i, t), layout.du[i]);
      sol.stationarity_residual = std::max(sol.stationarity_residual, useg.cwiseAbs().maxCoeff());
      const auto dseg = w.segment(layout.lambda(i, t), layout.dx[i]);
      sol.feasibility_residual = std::max(sol.feasibility_residual, dseg.cwiseAbs().maxCoeff());
    }
  }
  return sol;
}

// Exact adjoint gradient of the summed objective in the stacked controls.
struct CondensedObjective {
  const ControlProblem& problem;

  double eval(const MatrixXd& u_traj, MatrixXd* grad) const {
    const CombinedSystem& sys = problem.sys;
    const int t_end = problem.horizon;
    const int n = problem.n_agents();
    MatrixXd psi(t_end + 1, sys.dim());
    psi.row(0) = problem.psi0.transpose();
    for (int t = 0; t < t_end; ++t)
      psi.row(t + 1) =
          (sys.a * psi.row(t).transpose() + sys.b * u_traj.row(t).transpose()).transpose();
    double value = 0.0;
    for (int t = 0; t < t_end; ++t)
      for (int i = 0; i < n; ++i)
        value += problem.costs[i].eval(
            psi.row(t).segment(sys.offset[i], sys.block_dim(i)).transpose(),
            u_traj.row(t).segment(sys.u_offset[i], agent_du(sys, i)).transpose());
    if (grad != nullptr) {
      grad->resize(t_end, sys.b.cols());
      VectorXd p = VectorXd::Zero(sys.dim());
      for (int t = t_end - 1; t >= 0; --t) {
        VectorXd gu = VectorXd::Zero(sys.b.cols());
        VectorXd gx = VectorXd::Zero(sys.dim());
        for (int i = 0; i < n; ++i) {
          const auto psi_i = psi.row(t).segment(sys.offset[i], sys.block_dim(i)).transpose();
          const auto u_i = u_traj.row(t).segment(sys.u_offset[i], agent_du(sys, i)).transpose();
          const CostModel& cost = problem.costs[i];
          gu.segment(sys.u_offset[i], agent_du(sys, i)) =
              2.0 * cost.q_uu * u_i + 2.0 * cost.q_xu.transpose() * psi_i + cost.c_u;
          gx.segment(sys.offset[i], sys.block_dim(i)) =
              2.0 * cost.q_xx * psi_i + 2.0 * cost.q_xu * u_i + cost.c_x;
        }
        grad->row(t) = (gu + sys.b.transpose() * p).transpose();
        p = gx + sys.a.transpose() * p;
      }
    }
    return value;
  }
};

MatrixXd project_controls(const ControlProblem& problem, MatrixXd u_traj) {
  for (int t = 0; t < u_traj.rows(); ++t)
    for (long k = 0; k < u_traj.cols(); ++k)
      u_traj(t, k) = std::min(problem.u_max[k], std::max(problem.u_min[k], u_traj(t, k)));
  return u_traj;
}

// Accelerated projected gradient on the condensed QP. Returns the objective.
double solve_condensed(const ControlProblem& problem) {
  const CondensedObjective objective{problem};
  const int t_end = problem.horizon;
  const long nu = problem.sys.b.cols();

  // Lipschitz estimate through power iteration on the (constant) Hessian.
  MatrixXd zero = MatrixXd::Zero(t_end, nu);
  MatrixXd g0;
  objective.eval(zero, &g0);
  Rng rng(0x4c697073ULL);
  MatrixXd v(t_end, nu);
  for (int t = 0; t < t_end; ++t)
    for (long k = 0; k < nu; ++k) v(t, k) = rng.normal();
  v /= std::max(v.norm(), 1e-300);
  double lipschitz = 1.0;
  for (int it = 0; it < 30; ++it) {
    MatrixXd gv;
    objective.eval(zero + v, &gv);
    MatrixXd hv = gv - g0;
    const double norm = hv.norm();
    if (norm < 1e-14) break;
    lipschitz = norm;
    v = hv / norm;
  }
  lipschitz = std::max(1.05 * lipschitz, 1e-8);

  MatrixXd u = project_controls(problem, zero);
  MatrixXd y = u;
  double momentum = 1.0;
  double value = 0.0;
  double prev_value = std::numeric_limits<double>::infinity();
  int stall = 0;
  for (int it = 0; it < 4000; ++it) {
    MatrixXd grad;
    objective.eval(y, &grad);
    const MatrixXd u_next = project_controls(problem, y - grad / lipschitz);
    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    y = u_next + ((momentum - 1.0) / next_momentum) * (u_next - u);
    momentum = next_momentum;
    const double step = (u_next - u).cwiseAbs().maxCoeff();
    u = u_next;
    value = objective.eval(u, nullptr);
    if (value > prev_value) {  // restart acceleration when it overshoots
      y = u;
      momentum = 1.0;
    }
    if (step <= 1e-12 && std::abs(value - prev_value) <= 1e-13 * (1.0 + std::abs(value))) {
      if (++stall >= 5) break;
    } else {
      stall = 0;
    }
    prev_value = value;
  }
  return value;
}

}  // namespace

GameSolution solve_optimum(const ControlProblem& problem, const GameOptions& options) {
  problem.validate();
  const McpLayout layout = make_layout(problem);
  const AffineMcp mcp = build_control_mcp(problem, true);
  const auto start = std::chrono::steady_clock::now();
  const McpResult res = solve_mcp(mcp, cold_start(problem, layout), options.mcp);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  GameSolution sol = extract_solution(problem, layout, mcp, res, elapsed);

  if (options.cross_check) {
    double max_state_dual = 0.0;
    for (const auto& ag : sol.agents) {
      if (ag.mu_x_min.size() > 0)
        max_state_dual = std::max(max_state_dual, ag.mu_x_min.cwiseAbs().maxCoeff());
      if (ag.mu_x_max.size() > 0)
        max_state_dual = std::max(max_state_dual, ag.mu_x_max.cwiseAbs().maxCoeff());
    }
    // The condensed solver cannot represent state bounds; only verify when
    // they are inactive at the reported solution.
    if (max_state_dual < 1e-7) {
      const double condensed = solve_condensed(problem);
      const double gap = std::abs(condensed - sol.total_objective);
      if (gap > 1e-6 * (1.0 + std::abs(sol.total_objective)))
        throw ConvergenceError("solve_optimum: projected-gradient cross-check disagrees (gap " +
                                   std::to_string(gap) + ")",
                               gap);
    }
  }
  return sol;
}

GameSolution solve_equilibrium(const ControlProblem& problem, const GameSolution* warm_start,
                               const GameOptions& options) {
  problem.validate();
  const McpLayout layout = make_layout(problem);
  const AffineMcp mcp = build_control_mcp(problem, false);
  const VectorXd z0 = warm_start != nullptr ? warm_start_point(problem, layout, *warm_start)
                                            : cold_start(problem, layout);
  const auto start = std::chrono::steady_clock::now();
  const McpResult res = solve_mcp(mcp, z0, options.mcp);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return extract_solution(problem, layout, mcp, res, elapsed);
}

std::vector<double> baseline_rollout(const ControlProblem& problem) {
  problem.validate();
  const CombinedSystem& sys = problem.sys;
  std::vector<double> objectives(problem.n_agents(), 0.0);
  VectorXd psi = problem.psi0;
  for (int t = 0; t < problem.horizon; ++t) {
    for (int i = 0; i < problem.n_agents(); ++i)
      objectives[i] += problem.costs[i].eval(psi.segment(sys.offset[i], sys.block_dim(i)),
                                             VectorXd::Zero(agent_du(sys, i)));
    psi = sys.a * psi;
  }
  return objectives;
}

nlohmann::json GameSolution::to_json() const {
  nlohmann::json j;
  j["total_objective"] = total_objective;
  j["fb_residual"] = fb_residual;
  j["stationarity_residual"] = stationarity_residual;
  j["complementarity_residual"] = complementarity_residual;
  j["feasibility_residual"] = feasibility_residual;
  j["iterations"] = iterations;
  j["wall_time_s"] = wall_time_s;
  j["converged"] = converged;
  auto& ags = j["agents"] = nlohmann::json::array();
  for (const auto& ag : agents)
    ags.push_back({{"objective", ag.objective}, {"rms_control", ag.rms_control}});
  return j;
}

}  // namespace multikoop
