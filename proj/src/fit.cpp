#include "multikoop/fit.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "multikoop/linalg.hpp"
#include "multikoop/reduction.hpp"

namespace multikoop {

namespace {

// Minimizes (1/N)|Z G^T - Y|_F^2 + ridge |G|_F^2. Returns G (targets x
// regressors). One iterative refinement pass keeps the normal-equation
// gradient near machine precision.
MatrixXd ridge_regress(const MatrixXd& z, const MatrixXd& y, const FitOptions& options,
                       const std::string& context, BlockFitStats* stats) {
  const long n = z.rows();
  const long p = z.cols();
  if (n < static_cast<long>(options.min_samples_factor) * p)
    throw DataError(context + ": " + std::to_string(n) + " samples for " + std::to_string(p) +
                    " regressors; need at least " + std::to_string(options.min_samples_factor) +
                    "x as many samples");

  const MatrixXd gram0 = (z.transpose() * z) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram0);
  const double ev_max = es.eigenvalues().maxCoeff();
  const double ev_min = es.eigenvalues().minCoeff();
  if (ev_min <= 1e-16 * std::max(ev_max, 1.0))
    throw DataError(context + ": rank-deficient regression (relative eigenvalue " +
                    std::to_string(ev_min / std::max(ev_max, 1.0)) + ")");

  MatrixXd gram = gram0;
  gram.diagonal().array() += options.ridge;
  const MatrixXd rhs = (z.transpose() * y) / static_cast<double>(n);
  Eigen::LDLT<MatrixXd> ldlt(gram);
  MatrixXd gt = ldlt.solve(rhs);
  gt += ldlt.solve(rhs - gram * gt);

  if (stats != nullptr) {
    stats->name = context;
    stats->n_samples = n;
    stats->grad_max = 2.0 * (gram * gt - rhs).cwiseAbs().maxCoeff();
    stats->rms_residual = std::sqrt((z * gt - y).squaredNorm() / static_cast<double>(y.size()));
  }
  return gt.transpose();
}

// Columns [begin, begin+len) of G.
MatrixXd slice(const MatrixXd& g, long begin, long len) { return g.middleCols(begin, len); }

MatrixXd repeat_rows(const MatrixXd& slow, int m) {
  MatrixXd out(slow.rows() * m, slow.cols());
  for (long s = 0; s < slow.rows(); ++s) out.middleRows(s * m, m).rowwise() = slow.row(s);
  return out;
}

constexpr double kFactorTol = 1e-10;

}  // namespace

StructuredKoopman fit_flat(const SnapshotDataset& data, const DictionarySet& dicts,
                           const FitOptions& options, FitReport* report) {
  if (data.variant != Variant::flat) throw ConfigError("fit_flat: dataset is not a flat dataset");
  const int n_agents = static_cast<int>(data.agents.size());

  StructuredKoopman model;
  model.variant = Variant::flat;
  model.rho_target = options.rho_target;
  model.dicts = dicts;
  model.agents.resize(n_agents);

  for (int i = 0; i < n_agents; ++i) {
    const auto& ds = data.agents[i];
    const long n = ds.psi_x.rows();
    const long dx = ds.psi_x.cols();
    const long du = ds.psi_u.cols();

    long p = dx + du;
    for (int j = 0; j < n_agents; ++j)
      if (j != i) p += data.agents[j].psi_x.cols();
    MatrixXd z(n, p);
    long col = 0;
    z.middleCols(col, dx) = ds.psi_x;
    col += dx;
    std::vector<std::pair<int, long>> cross_cols;
    for (int j = 0; j < n_agents; ++j) {
      if (j == i) continue;
      const long dj = data.agents[j].psi_x.cols();
      z.middleCols(col, dj) = data.agents[j].psi_x;
      cross_cols.emplace_back(j, col);
      col += dj;
    }
    z.middleCols(col, du) = ds.psi_u;

    BlockFitStats stats;
    const std::string context = "agent " + std::to_string(i + 1) + " slow regression";
    const MatrixXd g = ridge_regress(z, ds.psi_x_next, options, context, &stats);

    const MatrixXd a = slice(g, 0, dx);
    auto& ag = model.agents[i];
    for (const auto& [j, cbegin] : cross_cols)
      ag.k_xx_cross[j] =
          solve_i_minus(a, slice(g, cbegin, data.agents[j].psi_x.cols()), kFactorTol, context);
    ag.k_xu = solve_i_minus(a, slice(g, col, du), kFactorTol, context);
    ag.k_xx = stability_project(a, options.rho_target);

    stats.rho_raw = spectral_radius(a);
    stats.rho_projected = spectral_radius(ag.k_xx);
    if (report != nullptr) report->blocks.push_back(stats);
  }
  return model;
}

StructuredKoopman fit_hier(const SnapshotDataset& data, const DictionarySet& dicts,
                           const ScaleConfig& scale, const FitOptions& options, FitReport* report) {
  if (data.variant != Variant::hier) throw ConfigError("fit_hier: dataset is not a hierarchical dataset");
  if (data.m != scale.m)
    throw ConfigError("fit_hier: dataset was generated with m = " + std::to_string(data.m) +
                      " but scale has m = " + std::to_string(scale.m));
  const int n_agents = static_cast<int>(data.agents.size());
  for (const auto& ag : data.agents)
    if (ag.fast_y.rows() == 0 || ag.fast_w.rows() == 0)
      throw DataError("fit_hier: dataset is missing fast substep records");

  StructuredKoopman model;
  model.variant = Variant::hier;
  model.rho_target = options.rho_target;
  model.dicts = dicts;
  model.agents.resize(n_agents);

  for (int i = 0; i < n_agents; ++i) {
    const auto& ds = data.agents[i];
    const long dx = ds.psi_x.cols();
    const long dy = ds.fast_y.cols();
    const long dw = ds.fast_w.cols();
    const long du = ds.psi_u.cols();
    auto& ag = model.agents[i];

    const MatrixXd x_rep = repeat_rows(ds.psi_x, data.m);
    const MatrixXd u_rep = repeat_rows(ds.psi_u, data.m);

    {
      const std::string context = "agent " + std::to_string(i + 1) + " fast-y regression";
      MatrixXd z(ds.fast_y.rows(), dy + dx + du);
      z << ds.fast_y, x_rep, u_rep;
      BlockFitStats stats;
      const MatrixXd g = ridge_regress(z, ds.fast_y_next, options, context, &stats);
      const MatrixXd a = slice(g, 0, dy);
      ag.k_yx = solve_i_minus(a, slice(g, dy, dx), kFactorTol, context);
      ag.k_yu = solve_i_minus(a, slice(g, dy + dx, du), kFactorTol, context);
      ag.k_yy = stability_project(a, options.rho_target);
      stats.rho_raw = spectral_radius(a);
      stats.rho_projected = spectral_radius(ag.k_yy);
      if (report != nullptr) report->blocks.push_back(stats);
    }

    {
      const std::string context = "agent " + std::to_string(i + 1) + " fast-w regression";
      const long px = options.zero_xw_blocks ? 0 : dx;
      MatrixXd z(ds.fast_w.rows(), dw + px + dy + du);
      if (options.zero_xw_blocks)
        z << ds.fast_w, ds.fast_y, u_rep;
      else
        z << ds.fast_w, x_rep, ds.fast_y, u_rep;
      BlockFitStats stats;
      const MatrixXd g = ridge_regress(z, ds.fast_w_next, options, context, &stats);
      const MatrixXd a = slice(g, 0, dw);
      ag.k_wx = options.zero_xw_blocks ? MatrixXd::Zero(dw, dx)
                                       : solve_i_minus(a, slice(g, dw, dx), kFactorTol, context);
      ag.k_wy = solve_i_minus(a, slice(g, dw + px, dy), kFactorTol, context);
      ag.k_wu = solve_i_minus(a, slice(g, dw + px + dy, du), kFactorTol, context);
      ag.k_ww = stability_project(a, options.rho_target);
      stats.rho_raw = spectral_radius(a);
      stats.rho_projected = spectral_radius(ag.k_ww);
      if (report != nullptr) report->blocks.push_back(stats);
    }

    {
      const std::string context = "agent " + std::to_string(i + 1) + " slow regression";
      long p = dx + dy + (options.zero_xw_blocks ? 0 : dw);
      for (int j = 0; j < n_agents; ++j)
        if (j != i) p += data.agents[j].psi_x.cols();
      MatrixXd z(ds.psi_x.rows(), p);
      long col = 0;
      z.middleCols(col, dx) = ds.psi_x;
      col += dx;
      std::vector<std::pair<int, long>> cross_cols;
      for (int j = 0; j < n_agents; ++j) {
        if (j == i) continue;
        const long dj = data.agents[j].psi_x.cols();
        z.middleCols(col, dj) = data.agents[j].psi_x;
        cross_cols.emplace_back(j, col);
        col += dj;
      }
      z.middleCols(col, dy) = ds.psi_y_bar;
      const long y_col = col;
      col += dy;
      if (!options.zero_xw_blocks) z.middleCols(col, dw) = ds.psi_w_bar;

      BlockFitStats stats;
      const MatrixXd g = ridge_regress(z, ds.psi_x_next, options, context, &stats);
      const MatrixXd a = slice(g, 0, dx);
      for (const auto& [j, cbegin] : cross_cols)
        ag.k_xx_cross[j] =
            solve_i_minus(a, slice(g, cbegin, data.agents[j].psi_x.cols()), kFactorTol, context);
      ag.k_xy = solve_i_minus(a, slice(g, y_col, dy), kFactorTol, context);
      ag.k_xw = options.zero_xw_blocks ? MatrixXd::Zero(dx, dw)
                                       : solve_i_minus(a, slice(g, col, dw), kFactorTol, context);
      ag.k_xx = stability_project(a, options.rho_target);
      stats.rho_raw = spectral_radius(a);
      stats.rho_projected = spectral_radius(ag.k_xx);
      if (report != nullptr) report->blocks.push_back(stats);
    }
  }

  if (report != nullptr) {
    try {
      const ReducedModel reduced = build_reduced(model);
      for (int i = 0; i < n_agents; ++i) {
        const double rho = spectral_radius(reduced.agents[i].b_xx);
        if (rho > 1.0)
          report->warnings.push_back("reduced B_xx_" + std::to_string(i + 1) +
                                     " is unstable (rho = " + std::to_string(rho) + ")");
      }
      const double rho_comb = spectral_radius(assemble_combined(reduced).a);
      if (rho_comb > 1.0)
        report->warnings.push_back("reduced B_xx_comb is unstable (rho = " +
                                   std::to_string(rho_comb) + ")");
    } catch (const Error& e) {
      report->warnings.push_back(std::string("reduced-model verification failed: ") + e.what());
    }
  }
  return model;
}

}  // namespace multikoop
