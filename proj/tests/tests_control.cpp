#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "vendor/doctest.h"

#include <cmath>
#include <vector>

#include "multikoop/cost.hpp"
#include "multikoop/game.hpp"
#include "multikoop/mcp.hpp"
#include "multikoop/reduction.hpp"
#include "multikoop/rng.hpp"

using namespace multikoop;

namespace {

MatrixXd random_matrix(Rng& rng, long rows, long cols, double scale) {
  return MatrixXd::NullaryExpr(rows, cols, [&] { return scale * rng.normal(); });
}

DictionarySet identity_dicts(Variant variant, int n_agents) {
  DictionarySet dicts;
  dicts.variant = variant;
  for (int i = 0; i < n_agents; ++i) {
    dicts.x.push_back(DictionarySpec::identity(1));
    dicts.u.push_back(DictionarySpec::identity(1));
    if (variant == Variant::hier) {
      dicts.y.push_back(DictionarySpec::identity(1));
      dicts.w.push_back(DictionarySpec::identity(1));
    }
  }
  return dicts;
}

StructuredKoopman scalar_flat_model() {
  StructuredKoopman model;
  model.variant = Variant::flat;
  model.dicts = identity_dicts(Variant::flat, 2);
  model.agents.resize(2);
  model.agents[0].k_xx = MatrixXd::Constant(1, 1, 0.5);
  model.agents[0].k_xx_cross[1] = MatrixXd::Constant(1, 1, 0.2);
  model.agents[0].k_xu = MatrixXd::Constant(1, 1, 0.7);
  model.agents[1].k_xx = MatrixXd::Constant(1, 1, 0.6);
  model.agents[1].k_xx_cross[0] = MatrixXd::Constant(1, 1, -0.3);
  model.agents[1].k_xu = MatrixXd::Constant(1, 1, 0.8);
  return model;
}

StructuredKoopman scalar_hier_model() {
  StructuredKoopman model;
  model.variant = Variant::hier;
  model.dicts = identity_dicts(Variant::hier, 2);
  model.agents.resize(2);
  for (int i = 0; i < 2; ++i) {
    auto& ag = model.agents[i];
    ag.k_xx = MatrixXd::Constant(1, 1, 0.5);
    ag.k_xx_cross[1 - i] = MatrixXd::Constant(1, 1, 0.2);
    ag.k_xy = MatrixXd::Constant(1, 1, 0.2);
    ag.k_xw = MatrixXd::Constant(1, 1, 0.3);
    ag.k_yy = MatrixXd::Constant(1, 1, 0.5);
    ag.k_yx = MatrixXd::Constant(1, 1, 1.0);
    ag.k_yu = MatrixXd::Constant(1, 1, 0.3);
    ag.k_ww = MatrixXd::Constant(1, 1, 0.4);
    ag.k_wx = MatrixXd::Constant(1, 1, 0.1);
    ag.k_wy = MatrixXd::Constant(1, 1, 0.6);
    ag.k_wu = MatrixXd::Constant(1, 1, 0.2);
  }
  return model;
}

// Two-agent scalar game with hand-picked combined dynamics.
ControlProblem scalar_game(double psi0_0, double psi0_1, int horizon, double u_bound = 10.0,
                           double x_bound = 10.0) {
  ControlProblem problem;
  problem.horizon = horizon;
  problem.sys.a.resize(2, 2);
  problem.sys.a << 0.5, 0.2, -0.3, 0.6;
  problem.sys.b = MatrixXd::Zero(2, 2);
  problem.sys.b(0, 0) = 0.7;
  problem.sys.b(1, 1) = 0.8;
  problem.sys.offset = {0, 1, 2};
  problem.sys.u_offset = {0, 1, 2};
  for (int i = 0; i < 2; ++i) {
    CostModel cost;
    cost.q_xx = MatrixXd::Identity(1, 1);
    cost.q_xu = MatrixXd::Zero(1, 1);
    cost.q_uu = MatrixXd::Identity(1, 1);
    cost.c_x = VectorXd::Zero(1);
    cost.c_u = VectorXd::Zero(1);
    problem.costs.push_back(cost);
    problem.selectors.push_back(MatrixXd::Identity(1, 1));
  }
  problem.psi0.resize(2);
  problem.psi0 << psi0_0, psi0_1;
  problem.x_min = VectorXd::Constant(2, -x_bound);
  problem.x_max = VectorXd::Constant(2, x_bound);
  problem.u_min = VectorXd::Constant(2, -u_bound);
  problem.u_max = VectorXd::Constant(2, u_bound);
  return problem;
}

// Exact quadratic reconstruction of v -> J(v) from function evaluations,
// then one Newton solve. Valid because J is exactly quadratic.
VectorXd minimize_quadratic(const std::function<double(const VectorXd&)>& j, int n) {
  MatrixXd h(n, n);
  VectorXd g(n);
  const double j0 = j(VectorXd::Zero(n));
  for (int k = 0; k < n; ++k) {
    VectorXd ek = VectorXd::Zero(n);
    ek[k] = 1.0;
    const double jp = j(ek), jm = j(-ek);
    g[k] = (jp - jm) / 2.0;
    h(k, k) = jp + jm - 2.0 * j0;
    for (int l = 0; l < k; ++l) {
      VectorXd el = VectorXd::Zero(n);
      el[l] = 1.0;
      h(k, l) = h(l, k) = j(ek + el) - jp - j(el) + j0;
    }
  }
  return Eigen::LDLT<MatrixXd>(h).solve(-g);
}

}  // namespace

TEST_CASE("stage cost evaluates the full quadratic form") {
  CostModel cost;
  cost.q_xx = MatrixXd::Constant(1, 1, 2.0);
  cost.q_xu = MatrixXd::Constant(1, 1, 0.5);
  cost.q_uu = MatrixXd::Constant(1, 1, 3.0);
  cost.c_x = VectorXd::Constant(1, 1.0);
  cost.c_u = VectorXd::Constant(1, -1.0);
  cost.c0 = 0.25;
  const VectorXd psi = VectorXd::Constant(1, 2.0);
  const VectorXd u = VectorXd::Constant(1, -1.0);
  CHECK(cost.eval(psi, u) == doctest::Approx(8.0 - 2.0 + 3.0 + 2.0 + 1.0 + 0.25).epsilon(1e-14));
  CHECK(cost.eval(VectorXd::Zero(1), VectorXd::Zero(1)) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("flat cost is state energy plus control effort") {
  const auto model = scalar_flat_model();
  const auto costs = build_costs(model);
  REQUIRE(costs.size() == 2);
  const VectorXd psi = VectorXd::Constant(1, 1.0);
  const VectorXd u = VectorXd::Constant(1, 1.0);
  CHECK(costs[0].eval(psi, u) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(costs[0].q_xu.cwiseAbs().maxCoeff() == 0.0);
  CHECK(costs[0].c0 == 0.0);
}

TEST_CASE("hierarchical cost scores the pinned fast variables") {
  const auto model = scalar_hier_model();
  const auto reduced = build_reduced(model);
  const auto cost = build_cost(model, 0, &reduced);
  // b_yx = 1, b_yu = 0.3, b_wx = 0.7, b_wu = 0.38
  CHECK(cost.q_xx(0, 0) == doctest::Approx(1.0 + 1.0 + 0.49).epsilon(1e-12));
  CHECK(cost.q_xu(0, 0) == doctest::Approx(0.3 + 0.7 * 0.38).epsilon(1e-12));
  CHECK(cost.q_uu(0, 0) == doctest::Approx(0.09 + 0.38 * 0.38).epsilon(1e-12));

  ReducedModel decoupled = reduced;
  for (auto& ag : decoupled.agents) {
    ag.b_yx.setZero();
    ag.b_yu.setZero();
    ag.b_wx.setZero();
    ag.b_wu.setZero();
  }
  const auto bare = build_cost(model, 0, &decoupled);
  CHECK(bare.q_xx(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bare.q_xu.cwiseAbs().maxCoeff() == 0.0);
  CHECK(bare.q_uu.cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(build_cost(model, 0, nullptr), ConfigError);
}

TEST_CASE("complementarity solver handles the unit lcp") {
  const int n = 4;
  AffineMcp mcp;
  Eigen::SparseMatrix<double> m(n, n);
  m.setIdentity();
  mcp.m = m;
  mcp.is_complementarity.assign(n, true);

  mcp.q = VectorXd::Constant(n, -1.0);
  auto result = solve_mcp(mcp);
  CHECK(result.converged);
  CHECK(result.residual < 1e-10);
  CHECK((result.z - VectorXd::Ones(n)).cwiseAbs().maxCoeff() < 1e-10);

  mcp.q = VectorXd::Constant(n, 1.0);
  result = solve_mcp(mcp);
  CHECK(result.converged);
  CHECK(result.z.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("complementarity solver matches active-set enumeration") {
  Rng rng(70);
  const int n = 6;
  for (int trial = 0; trial < 5; ++trial) {
    const MatrixXd r = random_matrix(rng, n, n, 1.0);
    const MatrixXd m_dense = r * r.transpose() + MatrixXd::Identity(n, n);
    const VectorXd q = random_matrix(rng, n, 1, 2.0);
    const int n_free = trial % 3;  // first rows become equations

    AffineMcp mcp;
    mcp.m = m_dense.sparseView();
    mcp.q = q;
    mcp.is_complementarity.assign(n, true);
    for (int i = 0; i < n_free; ++i) mcp.is_complementarity[i] = false;

    VectorXd oracle;
    bool found = false;
    const int n_comp = n - n_free;
    for (int mask = 0; mask < (1 << n_comp) && !found; ++mask) {
      std::vector<int> active;
      for (int i = 0; i < n_free; ++i) active.push_back(i);
      for (int i = 0; i < n_comp; ++i)
        if (mask & (1 << i)) active.push_back(n_free + i);
      const int na = static_cast<int>(active.size());
      MatrixXd maa(na, na);
      VectorXd qa(na);
      for (int r2 = 0; r2 < na; ++r2) {
        qa[r2] = q[active[r2]];
        for (int c2 = 0; c2 < na; ++c2) maa(r2, c2) = m_dense(active[r2], active[c2]);
      }
      const VectorXd za = maa.partialPivLu().solve(-qa);
      VectorXd z = VectorXd::Zero(n);
      for (int r2 = 0; r2 < na; ++r2) z[active[r2]] = za[r2];
      const VectorXd w = m_dense * z + q;
      bool ok = true;
      for (int i = n_free; i < n && ok; ++i) {
        if (z[i] < -1e-10 || w[i] < -1e-10) ok = false;
      }
      for (int r2 = 0; r2 < na && ok; ++r2)
        if (std::abs(w[active[r2]]) > 1e-8) ok = false;
      if (ok) {
        oracle = z;
        found = true;
      }
    }
    REQUIRE(found);

    const auto result = solve_mcp(mcp);
    CHECK(result.converged);
    CHECK((result.z - oracle).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("single-stage problem matches the closed-form minimizer") {
  ControlProblem problem;
  problem.horizon = 1;
  problem.sys.a = MatrixXd::Constant(1, 1, 0.5);
  problem.sys.b = MatrixXd::Constant(1, 1, 0.7);
  problem.sys.offset = {0, 1};
  problem.sys.u_offset = {0, 1};
  CostModel cost;
  cost.q_xx = MatrixXd::Identity(1, 1);
  cost.q_xu = MatrixXd::Constant(1, 1, 0.3);
  cost.q_uu = MatrixXd::Identity(1, 1);
  cost.c_x = VectorXd::Zero(1);
  cost.c_u = VectorXd::Zero(1);
  problem.costs.push_back(cost);
  problem.selectors.push_back(MatrixXd::Identity(1, 1));
  problem.psi0 = VectorXd::Constant(1, 0.8);
  problem.x_min = VectorXd::Constant(1, -10.0);
  problem.x_max = VectorXd::Constant(1, 10.0);
  problem.u_min = VectorXd::Constant(1, -10.0);
  problem.u_max = VectorXd::Constant(1, 10.0);

  const auto solution = solve_optimum(problem);
  REQUIRE(solution.converged);
  CHECK(solution.fb_residual < 1e-8);
  // Only the t=0 stage counts: min over u of psi0^2 + 2*0.3*psi0*u + u^2.
  CHECK(solution.agents[0].u(0, 0) == doctest::Approx(-0.3 * 0.8).epsilon(1e-9));
  CHECK(solution.total_objective == doctest::Approx(0.64 - 0.1152 + 0.0576).epsilon(1e-9));
  CHECK(solution.agents[0].psi(1, 0) ==
        doctest::Approx(0.5 * 0.8 + 0.7 * (-0.24)).epsilon(1e-9));
  CHECK(solution.agents[0].lambda(0, 0) == doctest::Approx(0.0).epsilon(1e-9));

  // A binding control bound shifts the minimizer to the boundary.
  problem.u_min = VectorXd::Constant(1, -0.1);
  const auto clamped = solve_optimum(problem);
  REQUIRE(clamped.converged);
  CHECK(clamped.agents[0].u(0, 0) == doctest::Approx(-0.1).epsilon(1e-9));
  CHECK(clamped.agents[0].mu_u_min(0, 0) == doctest::Approx(0.28).epsilon(1e-8));
  CHECK(clamped.total_objective > solution.total_objective);
}

TEST_CASE("mcp layout tiles variables without overlap") {
  const auto problem = scalar_game(0.5, -0.4, 3);
  const auto layout = make_layout(problem);
  CHECK(layout.n_agents == 2);
  CHECK(layout.horizon == 3);
  // Per agent: psi 3, u 3, lambda 3, mu_x 2*3, mu_u 2*3 = 21.
  CHECK(layout.n_total == 42);
  CHECK(layout.psi(0, 1) == layout.base_psi[0]);
  CHECK(layout.u(1, 2) == layout.base_u[1] + 2);
  CHECK(layout.mu_u_max(1, 2) == layout.n_total - 1 - 0);
}

TEST_CASE("optimum and equilibrium systems differ only in rival adjoint blocks") {
  const auto problem = scalar_game(0.5, -0.4, 3);
  const auto layout = make_layout(problem);
  const auto opt = build_optimum_kkt(problem);
  const auto eq = build_equilibrium_mcp(problem);
  REQUIRE(opt.size() == eq.size());
  CHECK((opt.q - eq.q).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(opt.is_complementarity == eq.is_complementarity);

  Eigen::SparseMatrix<double> diff = opt.m - eq.m;
  diff.prune(0.0, 0.0);
  int n_diff = 0;
  for (int outer = 0; outer < diff.outerSize(); ++outer) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(diff, outer); it; ++it) {
      if (it.value() == 0.0) continue;
      ++n_diff;
      const long row = it.row(), col = it.col();
      bool located = false;
      for (int i = 0; i < 2 && !located; ++i) {
        const int j = 1 - i;
        for (int t = 1; t <= 2 && !located; ++t) {
          if (row == layout.psi(i, t) && col == layout.lambda(j, t)) {
            located = true;
            // The extra optimum entry is the rival coupling transposed.
            CHECK(it.value() == problem.sys.a(j, i));
          }
        }
      }
      CHECK(located);
    }
  }
  // One rival block per agent per interior stage: 2 agents x t in {1, 2}.
  CHECK(n_diff == 4);
}

TEST_CASE("decoupled agents make both solution concepts coincide") {
  auto problem = scalar_game(0.6, -0.8, 6);
  problem.sys.a(0, 1) = 0.0;
  problem.sys.a(1, 0) = 0.0;
  const auto opt = solve_optimum(problem);
  const auto eq = solve_equilibrium(problem);
  REQUIRE(opt.converged);
  REQUIRE(eq.converged);
  for (int i = 0; i < 2; ++i) {
    CHECK((opt.agents[i].u - eq.agents[i].u).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((opt.agents[i].psi - eq.agents[i].psi).cwiseAbs().maxCoeff() < 1e-8);
  }
  CHECK(opt.total_objective == doctest::Approx(eq.total_objective).epsilon(1e-9));
}

TEST_CASE("zero initial state needs no control") {
  const auto problem = scalar_game(0.0, 0.0, 5);
  const auto solution = solve_optimum(problem);
  REQUIRE(solution.converged);
  CHECK(solution.total_objective == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(solution.agents[0].u.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(solution.agents[1].u.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("pinning the controls to zero reproduces the baseline cost") {
  auto problem = scalar_game(0.5, -0.4, 5, 0.0);  // u_min = u_max = 0
  const auto baseline = baseline_rollout(problem);
  const auto solution = solve_optimum(problem);
  REQUIRE(solution.converged);
  const double base_total = baseline[0] + baseline[1];
  CHECK(solution.total_objective == doctest::Approx(base_total).epsilon(1e-9));
  CHECK(solution.agents[0].u.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("equilibrium matches fixed-point best-response iteration") {
  const int horizon = 5;
  const auto problem = scalar_game(0.5, -0.4, horizon);
  const auto mcp_solution = solve_equilibrium(problem);
  REQUIRE(mcp_solution.converged);
  CHECK(mcp_solution.fb_residual < 1e-8);

  // Each agent optimizes against the rival's pinned state trajectory; the
  // fixed point of that map is the equilibrium the stacked system encodes.
  const MatrixXd a = problem.sys.a;
  std::vector<VectorXd> u = {VectorXd::Zero(horizon), VectorXd::Zero(horizon)};
  const auto rollout = [&](const std::vector<VectorXd>& controls) {
    MatrixXd traj(horizon + 1, 2);
    traj.row(0) = problem.psi0.transpose();
    for (int t = 0; t < horizon; ++t) {
      VectorXd ut(2);
      ut << controls[0][t], controls[1][t];
      traj.row(t + 1) = (a * traj.row(t).transpose() + problem.sys.b * ut).transpose();
    }
    return traj;
  };

  for (int sweep = 0; sweep < 200; ++sweep) {
    double change = 0.0;
    for (int i = 0; i < 2; ++i) {
      const int j = 1 - i;
      const MatrixXd pinned = rollout(u);
      const auto objective = [&](const VectorXd& v) {
        double total = 0.0;
        double psi = problem.psi0[i];
        for (int t = 0; t < horizon; ++t) {
          total += psi * psi + v[t] * v[t];
          psi = a(i, i) * psi + a(i, j) * pinned(t, j) + problem.sys.b(i, i) * v[t];
        }
        return total;
      };
      const VectorXd best = minimize_quadratic(objective, horizon);
      change = std::max(change, (best - u[i]).cwiseAbs().maxCoeff());
      u[i] = best;
    }
    if (change < 1e-13) break;
  }

  for (int i = 0; i < 2; ++i)
    CHECK((mcp_solution.agents[i].u.col(0) - u[i]).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("warm-started equilibrium reproduces the cold solve") {
  const auto problem = scalar_game(0.9, -0.7, 8);
  const auto cold = solve_equilibrium(problem);
  const auto opt = solve_optimum(problem);
  const auto warm = solve_equilibrium(problem, &opt);
  REQUIRE(cold.converged);
  REQUIRE(warm.converged);
  for (int i = 0; i < 2; ++i)
    CHECK((cold.agents[i].u - warm.agents[i].u).cwiseAbs().maxCoeff() < 1e-7);
  CHECK(warm.total_objective == doctest::Approx(cold.total_objective).epsilon(1e-9));
}

TEST_CASE("optimum weakly dominates equilibrium and baseline on a coupled game") {
  const auto problem = scalar_game(0.5, -0.4, 10);
  const auto opt = solve_optimum(problem);
  const auto eq = solve_equilibrium(problem, &opt);
  const auto baseline = baseline_rollout(problem);
  REQUIRE(opt.converged);
  REQUIRE(eq.converged);
  CHECK(opt.total_objective <= eq.total_objective + 1e-6 * (1.0 + std::abs(opt.total_objective)));
  CHECK(opt.total_objective <= baseline[0] + baseline[1] + 1e-9);

  const auto j = opt.to_json();
  CHECK(j["total_objective"].is_number());
  CHECK(j["agents"].size() == 2);
  CHECK(j["converged"].get<bool>());
}

TEST_CASE("problem validation rejects inconsistent setups") {
  auto problem = scalar_game(0.5, -0.4, 3);
  problem.horizon = 0;
  CHECK_THROWS_AS(problem.validate(), ConfigError);

  problem = scalar_game(0.5, -0.4, 3);
  problem.psi0 = VectorXd::Zero(3);
  CHECK_THROWS_AS(problem.validate(), DimensionError);

  problem = scalar_game(0.5, -0.4, 3);
  problem.u_min = VectorXd::Constant(2, 20.0);
  CHECK_THROWS_AS(problem.validate(), ConfigError);
}

TEST_CASE("control problems assemble from fitted models") {
  const auto model = scalar_flat_model();
  VectorXd x0(2);
  x0 << 0.3, -0.2;
  const auto problem = make_control_problem(model, nullptr, x0, 4, -1.0, 1.0, -1.0, 1.0);
  CHECK(problem.horizon == 4);
  CHECK(problem.psi0.size() == 2);
  CHECK(problem.psi0[0] == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(problem.n_agents() == 2);
  CHECK(problem.costs[0].q_uu(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  problem.validate();

  const auto solution = solve_optimum(problem);
  CHECK(solution.converged);

  CHECK_THROWS_AS(make_control_problem(model, nullptr, VectorXd::Zero(5), 4, -1, 1, -1, 1),
                  DimensionError);

  const auto hier = scalar_hier_model();
  CHECK_THROWS_AS(make_control_problem(hier, nullptr, x0, 4, -1, 1, -1, 1), ConfigError);

  const auto reduced = build_reduced(hier);
  const auto hier_problem = make_control_problem(hier, &reduced, x0, 4, -1.0, 1.0, -1.0, 1.0);
  const auto hier_solution = solve_optimum(hier_problem);
  CHECK(hier_solution.converged);
  CHECK(hier_solution.fb_residual < 1e-8);
  const auto hier_eq = solve_equilibrium(hier_problem, &hier_solution);
  CHECK(hier_solution.total_objective <=
        hier_eq.total_objective + 1e-6 * (1.0 + std::abs(hier_solution.total_objective)));
}
