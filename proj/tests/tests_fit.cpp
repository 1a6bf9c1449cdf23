#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "vendor/doctest.h"

#include <cmath>

#include "multikoop/fit.hpp"
#include "multikoop/koopman.hpp"
#include "multikoop/linalg.hpp"
#include "multikoop/reduction.hpp"
#include "multikoop/rng.hpp"

using namespace multikoop;

namespace {

MatrixXd random_matrix(Rng& rng, long rows, long cols, double scale) {
  return MatrixXd::NullaryExpr(rows, cols, [&] { return scale * rng.normal(); });
}

MatrixXd random_stable(Rng& rng, long n, double rho) {
  MatrixXd a = random_matrix(rng, n, n, 1.0);
  return a * (rho / spectral_radius(a));
}

double max_abs_diff(const MatrixXd& a, const MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

struct FlatTruth {
  std::vector<MatrixXd> k_xx, k_xu;
  std::vector<std::map<int, MatrixXd>> k_cross;
  std::vector<long> dx{3, 2};
  std::vector<long> du{1, 1};
};

FlatTruth make_flat_truth(Rng& rng, double cross_scale) {
  FlatTruth t;
  t.k_cross.resize(2);
  for (int i = 0; i < 2; ++i) {
    t.k_xx.push_back(random_stable(rng, t.dx[i], 0.6));
    t.k_xu.push_back(random_matrix(rng, t.dx[i], t.du[i], 0.5));
    t.k_cross[i][1 - i] = random_matrix(rng, t.dx[i], t.dx[1 - i], cross_scale);
  }
  return t;
}

// Snapshot pairs drawn exactly from the self-centered lifted-linear form;
// the fit should reproduce every block up to the ridge perturbation.
SnapshotDataset flat_dataset_from_truth(const FlatTruth& t, int n, std::uint64_t seed) {
  SnapshotDataset data;
  data.variant = Variant::flat;
  data.n_samples = n;
  data.seed = seed;
  data.agents.resize(2);
  Rng rng(seed);
  std::vector<MatrixXd> psi(2), u(2);
  for (int i = 0; i < 2; ++i) {
    psi[i] = random_matrix(rng, n, t.dx[i], 1.0);
    u[i] = random_matrix(rng, n, t.du[i], 1.0);
  }
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    const MatrixXd eye = MatrixXd::Identity(t.dx[i], t.dx[i]);
    const MatrixXd coupling =
        psi[j] * t.k_cross[i].at(j).transpose() + u[i] * t.k_xu[i].transpose();
    data.agents[i].psi_x = psi[i];
    data.agents[i].psi_u = u[i];
    data.agents[i].psi_x_next =
        psi[i] * t.k_xx[i].transpose() + coupling * (eye - t.k_xx[i]).transpose();
  }
  return data;
}

DictionarySet identity_dicts(Variant variant, const std::vector<long>& dx,
                             const std::vector<long>& dy, const std::vector<long>& dw,
                             const std::vector<long>& du) {
  DictionarySet dicts;
  dicts.variant = variant;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    dicts.x.push_back(DictionarySpec::identity(static_cast<int>(dx[i])));
    dicts.u.push_back(DictionarySpec::identity(static_cast<int>(du[i])));
    if (variant == Variant::hier) {
      dicts.y.push_back(DictionarySpec::identity(static_cast<int>(dy[i])));
      dicts.w.push_back(DictionarySpec::identity(static_cast<int>(dw[i])));
    }
  }
  return dicts;
}

struct HierTruth {
  long dx = 3, dy = 2, dw = 2, du = 1;
  std::vector<AgentBlocks> agents;
};

HierTruth make_hier_truth(Rng& rng) {
  HierTruth t;
  t.agents.resize(2);
  for (int i = 0; i < 2; ++i) {
    auto& ag = t.agents[i];
    ag.k_xx = random_stable(rng, t.dx, 0.6);
    ag.k_xx_cross[1 - i] = random_matrix(rng, t.dx, t.dx, 0.2);
    ag.k_xy = random_matrix(rng, t.dx, t.dy, 0.3);
    ag.k_xw = random_matrix(rng, t.dx, t.dw, 0.3);
    ag.k_yy = random_stable(rng, t.dy, 0.5);
    ag.k_yx = random_matrix(rng, t.dy, t.dx, 0.4);
    ag.k_yu = random_matrix(rng, t.dy, t.du, 0.5);
    ag.k_ww = random_stable(rng, t.dw, 0.4);
    ag.k_wx = random_matrix(rng, t.dw, t.dx, 0.3);
    ag.k_wy = random_matrix(rng, t.dw, t.dy, 0.4);
    ag.k_wu = random_matrix(rng, t.dw, t.du, 0.5);
  }
  return t;
}

SnapshotDataset hier_dataset_from_truth(const HierTruth& t, int n, int m, std::uint64_t seed) {
  SnapshotDataset data;
  data.variant = Variant::hier;
  data.n_samples = n;
  data.m = m;
  data.seed = seed;
  data.agents.resize(2);
  Rng rng(seed);

  std::vector<MatrixXd> psi(2), u(2);
  for (int i = 0; i < 2; ++i) {
    psi[i] = random_matrix(rng, n, t.dx, 1.0);
    u[i] = random_matrix(rng, n, t.du, 1.0);
    auto& ds = data.agents[i];
    ds.psi_x = psi[i];
    ds.psi_u = u[i];
    ds.psi_x_next.resize(n, t.dx);
    ds.psi_y_bar.resize(n, t.dy);
    ds.psi_w_bar.resize(n, t.dw);
    ds.fast_y.resize(n * m, t.dy);
    ds.fast_y_next.resize(n * m, t.dy);
    ds.fast_w.resize(n * m, t.dw);
    ds.fast_w_next.resize(n * m, t.dw);
  }

  for (int i = 0; i < 2; ++i) {
    const auto& ag = t.agents[i];
    auto& ds = data.agents[i];
    const MatrixXd eye_y = MatrixXd::Identity(t.dy, t.dy);
    const MatrixXd eye_w = MatrixXd::Identity(t.dw, t.dw);
    const MatrixXd eye_x = MatrixXd::Identity(t.dx, t.dx);
    for (int s = 0; s < n; ++s) {
      const VectorXd x = psi[i].row(s).transpose();
      const VectorXd uu = u[i].row(s).transpose();
      VectorXd y = VectorXd::NullaryExpr(t.dy, [&] { return rng.normal(); });
      VectorXd w = VectorXd::NullaryExpr(t.dw, [&] { return rng.normal(); });
      const VectorXd zy = ag.k_yx * x + ag.k_yu * uu;
      VectorXd y_sum = VectorXd::Zero(t.dy), w_sum = VectorXd::Zero(t.dw);
      for (int k = 0; k < m; ++k) {
        const VectorXd zw = ag.k_wx * x + ag.k_wy * y + ag.k_wu * uu;
        const VectorXd y_next = ag.k_yy * (y - zy) + zy;
        const VectorXd w_next = ag.k_ww * (w - zw) + zw;
        ds.fast_y.row(s * m + k) = y.transpose();
        ds.fast_y_next.row(s * m + k) = y_next.transpose();
        ds.fast_w.row(s * m + k) = w.transpose();
        ds.fast_w_next.row(s * m + k) = w_next.transpose();
        y_sum += y;
        w_sum += w;
        y = y_next;
        w = w_next;
      }
      const VectorXd y_bar = y_sum / m, w_bar = w_sum / m;
      ds.psi_y_bar.row(s) = y_bar.transpose();
      ds.psi_w_bar.row(s) = w_bar.transpose();
      const VectorXd x_other = psi[1 - i].row(s).transpose();
      const VectorXd coupling =
          ag.k_xx_cross.at(1 - i) * x_other + ag.k_xw * w_bar + ag.k_xy * y_bar;
      ds.psi_x_next.row(s) = (ag.k_xx * x + (eye_x - ag.k_xx) * coupling).transpose();
    }
  }
  return data;
}

}  // namespace

TEST_CASE("flat fit recovers the generating blocks") {
  Rng rng(41);
  const auto truth = make_flat_truth(rng, 0.3);
  const auto data = flat_dataset_from_truth(truth, 400, 77);
  const auto dicts = identity_dicts(Variant::flat, truth.dx, {}, {}, truth.du);

  FitReport report;
  const auto model = fit_flat(data, dicts, {}, &report);
  REQUIRE(model.n_agents() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(max_abs_diff(model.agents[i].k_xx, truth.k_xx[i]) < 1e-6);
    CHECK(max_abs_diff(model.agents[i].k_xu, truth.k_xu[i]) < 1e-6);
    CHECK(max_abs_diff(model.agents[i].k_xx_cross.at(1 - i), truth.k_cross[i].at(1 - i)) < 1e-6);
  }
  REQUIRE(report.blocks.size() == 2);
  CHECK(report.blocks[0].name == "agent 1 slow regression");
  CHECK(report.blocks[0].n_samples == 400);
  CHECK(report.max_grad() < 1e-8);
  CHECK(report.blocks[0].rho_raw == doctest::Approx(0.6).epsilon(1e-4));
  CHECK(report.blocks[0].rho_projected == report.blocks[0].rho_raw);
  CHECK(report.warnings.empty());
}

TEST_CASE("decoupled data yields near-zero cross blocks") {
  Rng rng(43);
  const auto truth = make_flat_truth(rng, 0.0);
  const auto data = flat_dataset_from_truth(truth, 400, 78);
  const auto dicts = identity_dicts(Variant::flat, truth.dx, {}, {}, truth.du);
  const auto model = fit_flat(data, dicts);
  CHECK(model.agents[0].k_xx_cross.at(1).cwiseAbs().maxCoeff() < 1e-7);
  CHECK(model.agents[1].k_xx_cross.at(0).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("fit demands enough samples and full-rank regressors") {
  Rng rng(44);
  const auto truth = make_flat_truth(rng, 0.3);
  const auto dicts = identity_dicts(Variant::flat, truth.dx, {}, {}, truth.du);

  const auto small = flat_dataset_from_truth(truth, 30, 79);
  CHECK_THROWS_AS(fit_flat(small, dicts), DataError);

  auto degenerate = flat_dataset_from_truth(truth, 400, 80);
  for (int i = 0; i < 2; ++i) {
    auto& ds = degenerate.agents[i];
    for (long r = 1; r < ds.psi_x.rows(); ++r) {
      ds.psi_x.row(r) = ds.psi_x.row(0);
      ds.psi_u.row(r) = ds.psi_u.row(0);
      ds.psi_x_next.row(r) = ds.psi_x_next.row(0);
    }
  }
  CHECK_THROWS_AS(fit_flat(degenerate, dicts), DataError);
}

TEST_CASE("flat fit applies the stability projection when needed") {
  Rng rng(45);
  FlatTruth truth = make_flat_truth(rng, 0.1);
  truth.k_xx[0] *= 1.1 / 0.6;  // make agent 1 self block unstable
  const auto data = flat_dataset_from_truth(truth, 400, 81);
  const auto dicts = identity_dicts(Variant::flat, truth.dx, {}, {}, truth.du);
  FitReport report;
  const auto model = fit_flat(data, dicts, {}, &report);
  CHECK(report.blocks[0].rho_raw == doctest::Approx(1.1).epsilon(1e-4));
  CHECK(report.blocks[0].rho_projected == doctest::Approx(0.999).epsilon(1e-6));
  CHECK(spectral_radius(model.agents[0].k_xx) <= 0.999 + 1e-9);
}

TEST_CASE("hierarchical fit recovers every generating block") {
  Rng rng(46);
  const auto truth = make_hier_truth(rng);
  const auto data = hier_dataset_from_truth(truth, 300, 6, 82);
  const auto dicts = identity_dicts(Variant::hier, {truth.dx, truth.dx}, {truth.dy, truth.dy},
                                    {truth.dw, truth.dw}, {truth.du, truth.du});
  ScaleConfig scale;
  scale.dt_slow = 0.1;
  scale.m = 6;
  FitOptions options;
  options.zero_xw_blocks = false;
  FitReport report;
  const auto model = fit_hier(data, dicts, scale, options, &report);

  for (int i = 0; i < 2; ++i) {
    const auto& fitted = model.agents[i];
    const auto& ag = truth.agents[i];
    CHECK(max_abs_diff(fitted.k_yy, ag.k_yy) < 1e-6);
    CHECK(max_abs_diff(fitted.k_yx, ag.k_yx) < 1e-6);
    CHECK(max_abs_diff(fitted.k_yu, ag.k_yu) < 1e-6);
    CHECK(max_abs_diff(fitted.k_ww, ag.k_ww) < 1e-6);
    CHECK(max_abs_diff(fitted.k_wx, ag.k_wx) < 1e-6);
    CHECK(max_abs_diff(fitted.k_wy, ag.k_wy) < 1e-6);
    CHECK(max_abs_diff(fitted.k_wu, ag.k_wu) < 1e-6);
    CHECK(max_abs_diff(fitted.k_xx, ag.k_xx) < 1e-6);
    CHECK(max_abs_diff(fitted.k_xy, ag.k_xy) < 1e-6);
    CHECK(max_abs_diff(fitted.k_xw, ag.k_xw) < 1e-6);
    CHECK(max_abs_diff(fitted.k_xx_cross.at(1 - i), ag.k_xx_cross.at(1 - i)) < 1e-6);
  }
  REQUIRE(report.blocks.size() == 6);
  CHECK(report.max_grad() < 1e-8);
  CHECK(report.warnings.empty());
}

TEST_CASE("structural zero option pins the xw blocks") {
  Rng rng(47);
  HierTruth truth = make_hier_truth(rng);
  for (auto& ag : truth.agents) {
    ag.k_xw.setZero();
    ag.k_wx.setZero();
  }
  const auto data = hier_dataset_from_truth(truth, 300, 6, 83);
  const auto dicts = identity_dicts(Variant::hier, {truth.dx, truth.dx}, {truth.dy, truth.dy},
                                    {truth.dw, truth.dw}, {truth.du, truth.du});
  ScaleConfig scale;
  scale.dt_slow = 0.1;
  scale.m = 6;
  const auto model = fit_hier(data, dicts, scale);  // zero_xw_blocks defaults to true
  for (int i = 0; i < 2; ++i) {
    CHECK(model.agents[i].k_xw.cwiseAbs().maxCoeff() == 0.0);
    CHECK(model.agents[i].k_wx.cwiseAbs().maxCoeff() == 0.0);
    CHECK(max_abs_diff(model.agents[i].k_yy, truth.agents[i].k_yy) < 1e-6);
    CHECK(max_abs_diff(model.agents[i].k_xx, truth.agents[i].k_xx) < 1e-6);
  }
}

TEST_CASE("identity fast dynamics make the factor recovery singular") {
  Rng rng(48);
  const auto truth = make_hier_truth(rng);
  auto data = hier_dataset_from_truth(truth, 300, 6, 84);
  for (auto& ds : data.agents) ds.fast_y_next = ds.fast_y;
  const auto dicts = identity_dicts(Variant::hier, {truth.dx, truth.dx}, {truth.dy, truth.dy},
                                    {truth.dw, truth.dw}, {truth.du, truth.du});
  ScaleConfig scale;
  scale.dt_slow = 0.1;
  scale.m = 6;
  FitOptions options;
  options.ridge = 0.0;
  options.zero_xw_blocks = false;
  CHECK_THROWS_AS(fit_hier(data, dicts, scale, options), SingularityError);
}

TEST_CASE("fit rejects mismatched dataset variants") {
  Rng rng(49);
  const auto truth = make_flat_truth(rng, 0.2);
  const auto data = flat_dataset_from_truth(truth, 400, 85);
  const auto dicts = identity_dicts(Variant::flat, truth.dx, {}, {}, truth.du);
  ScaleConfig scale;
  CHECK_THROWS_AS(fit_hier(data, dicts, scale), ConfigError);
}

TEST_CASE("combined predictions match direct per-agent stepping") {
  Rng rng(50);
  const auto truth = make_flat_truth(rng, 0.3);
  StructuredKoopman model;
  model.variant = Variant::flat;
  model.dicts = identity_dicts(Variant::flat, truth.dx, {}, {}, truth.du);
  model.agents.resize(2);
  for (int i = 0; i < 2; ++i) {
    model.agents[i].k_xx = truth.k_xx[i];
    model.agents[i].k_xu = truth.k_xu[i];
    model.agents[i].k_xx_cross[1 - i] = truth.k_cross[i].at(1 - i);
  }

  const auto sys = assemble_combined(model);
  VectorXd psi0 = VectorXd::NullaryExpr(5, [&] { return rng.normal(); });
  MatrixXd controls = random_matrix(rng, 10, 2, 0.5);
  const MatrixXd rollout = predict(sys, psi0, controls, 10);

  std::vector<VectorXd> psi = {psi0.head(3), psi0.tail(2)};
  for (int step = 0; step < 10; ++step) {
    std::vector<VectorXd> next(2);
    for (int i = 0; i < 2; ++i) {
      const int j = 1 - i;
      const MatrixXd eye = MatrixXd::Identity(truth.dx[i], truth.dx[i]);
      const VectorXd coupling = truth.k_cross[i].at(j) * psi[j] +
                                truth.k_xu[i] * controls.row(step).segment(i, 1).transpose();
      next[i] = truth.k_xx[i] * psi[i] + (eye - truth.k_xx[i]) * coupling;
    }
    psi = next;
    VectorXd stacked(5);
    stacked << psi[0], psi[1];
    CHECK((rollout.row(step + 1).transpose() - stacked).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("reduction reproduces hand-computed scalar blocks") {
  StructuredKoopman model;
  model.variant = Variant::hier;
  model.dicts = identity_dicts(Variant::hier, {1, 1}, {1, 1}, {1, 1}, {1, 1});
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

  const auto reduced = build_reduced(model);
  const auto& ar = reduced.agents[0];
  CHECK(ar.b_yx(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ar.b_yu(0, 0) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(ar.b_wx(0, 0) == doctest::Approx(0.1 + 0.6 * 1.0).epsilon(1e-12));
  CHECK(ar.b_wu(0, 0) == doctest::Approx(0.2 + 0.6 * 0.3).epsilon(1e-12));
  CHECK(ar.b_xx(0, 0) == doctest::Approx(0.5 + 0.5 * (0.3 * 0.7 + 0.2 * 1.0)).epsilon(1e-12));
  CHECK(ar.b_xu(0, 0) == doctest::Approx(0.5 * (0.3 * 0.38 + 0.2 * 0.3)).epsilon(1e-12));
  CHECK(ar.g.at(1)(0, 0) == doctest::Approx(0.5 * 0.2).epsilon(1e-12));
}

TEST_CASE("reduced predictions match direct reduced stepping") {
  Rng rng(51);
  const auto truth = make_hier_truth(rng);
  StructuredKoopman model;
  model.variant = Variant::hier;
  model.dicts = identity_dicts(Variant::hier, {truth.dx, truth.dx}, {truth.dy, truth.dy},
                               {truth.dw, truth.dw}, {truth.du, truth.du});
  model.agents = truth.agents;
  const auto reduced = build_reduced(model);
  const auto sys = assemble_combined(reduced);

  VectorXd psi0 = VectorXd::NullaryExpr(6, [&] { return rng.normal(); });
  MatrixXd controls = random_matrix(rng, 8, 2, 0.5);
  const MatrixXd rollout = predict(sys, psi0, controls, 8);

  std::vector<VectorXd> psi = {psi0.head(3), psi0.tail(3)};
  for (int step = 0; step < 8; ++step) {
    std::vector<VectorXd> next(2);
    for (int i = 0; i < 2; ++i) {
      next[i] = reduced.agents[i].b_xx * psi[i] + reduced.agents[i].g.at(1 - i) * psi[1 - i] +
                reduced.agents[i].b_xu * controls.row(step).segment(i, 1).transpose();
    }
    psi = next;
    VectorXd stacked(6);
    stacked << psi[0], psi[1];
    CHECK((rollout.row(step + 1).transpose() - stacked).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("fast fixed point requires an invertible relaxation") {
  StructuredKoopman model;
  model.variant = Variant::hier;
  model.dicts = identity_dicts(Variant::hier, {1, 1}, {1, 1}, {1, 1}, {1, 1});
  model.agents.resize(2);
  for (int i = 0; i < 2; ++i) {
    auto& ag = model.agents[i];
    ag.k_xx = MatrixXd::Constant(1, 1, 0.5);
    ag.k_xx_cross[1 - i] = MatrixXd::Constant(1, 1, 0.1);
    ag.k_xy = MatrixXd::Constant(1, 1, 0.2);
    ag.k_xw = MatrixXd::Zero(1, 1);
    ag.k_yy = MatrixXd::Identity(1, 1);  // no contraction: fixed point undefined
    ag.k_yx = MatrixXd::Constant(1, 1, 0.4);
    ag.k_yu = MatrixXd::Constant(1, 1, 0.3);
    ag.k_ww = MatrixXd::Constant(1, 1, 0.4);
    ag.k_wx = MatrixXd::Zero(1, 1);
    ag.k_wy = MatrixXd::Constant(1, 1, 0.6);
    ag.k_wu = MatrixXd::Constant(1, 1, 0.2);
  }
  CHECK_THROWS_AS(build_reduced(model), SingularityError);
}

TEST_CASE("consistency check vanishes at the fixed point and decays in m") {
  Rng rng(52);
  const auto truth = make_hier_truth(rng);
  StructuredKoopman model;
  model.variant = Variant::hier;
  model.dicts = identity_dicts(Variant::hier, {truth.dx, truth.dx}, {truth.dy, truth.dy},
                               {truth.dw, truth.dw}, {truth.du, truth.du});
  model.agents = truth.agents;
  const auto reduced = build_reduced(model);

  std::vector<VectorXd> psi_x = {VectorXd::Constant(truth.dx, 0.4),
                                 VectorXd::Constant(truth.dx, -0.2)};
  std::vector<VectorXd> psi_u = {VectorXd::Constant(truth.du, 0.3),
                                 VectorXd::Constant(truth.du, -0.5)};

  const auto pinned = consistency_check_at(model, reduced, 16, psi_x, psi_u);
  CHECK(pinned.max_average_deviation < 1e-12);
  CHECK(pinned.max_slow_deviation < 1e-12);

  std::vector<VectorXd> y0 = {VectorXd::Zero(truth.dy), VectorXd::Zero(truth.dy)};
  std::vector<VectorXd> w0 = {VectorXd::Zero(truth.dw), VectorXd::Zero(truth.dw)};
  const auto coarse = consistency_check_at(model, reduced, 8, psi_x, psi_u, y0, w0);
  const auto fine = consistency_check_at(model, reduced, 64, psi_x, psi_u, y0, w0);
  CHECK(coarse.max_deviation() > 0.0);
  CHECK(fine.max_deviation() < coarse.max_deviation() / 4.0);

  ScaleConfig scale;
  scale.dt_slow = 0.1;
  scale.m = 12;
  const auto random_points = consistency_check(model, reduced, scale, 3, 5);
  CHECK(random_points.max_deviation() < 1e-12);
}
