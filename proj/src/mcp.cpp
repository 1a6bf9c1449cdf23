#include "multikoop/mcp.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>

namespace multikoop {

namespace {

// phi(a, b) = sqrt(a^2 + b^2) - a - b, zero iff a >= 0, b >= 0, ab = 0.
double fischer_burmeister(double a, double b) { return std::hypot(a, b) - a - b; }

VectorXd fb_map(const AffineMcp& mcp, const VectorXd& z, const VectorXd& w) {
  VectorXd phi(mcp.size());
  for (long i = 0; i < mcp.size(); ++i)
    phi[i] = mcp.is_complementarity[i] ? fischer_burmeister(z[i], w[i]) : w[i];
  return phi;
}

}  // namespace

McpResult solve_mcp(const AffineMcp& mcp, const VectorXd& z0, const McpOptions& options) {
  const long n = mcp.size();
  if (mcp.m.rows() != n || mcp.m.cols() != n ||
      static_cast<long>(mcp.is_complementarity.size()) != n)
    throw DimensionError("solve_mcp: M, q, and row kinds must agree in size");
  if (z0.size() != n) throw DimensionError("solve_mcp: initial point has wrong size");

  Eigen::SparseMatrix<double> eye(n, n);
  eye.setIdentity();

  McpResult result;
  result.z = z0;
  VectorXd w = mcp.m * result.z + mcp.q;
  VectorXd phi = fb_map(mcp, result.z, w);
  double theta = 0.5 * phi.squaredNorm();
  result.residual = phi.size() > 0 ? phi.cwiseAbs().maxCoeff() : 0.0;

  Eigen::SparseLU<Eigen::SparseMatrix<double>> newton_lu;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> lm_ldlt;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (result.residual <= options.tolerance) {
      result.converged = true;
      break;
    }

    // Clarke-generalized Jacobian: J = D_a + D_b * M.
    VectorXd da(n), db(n);
    for (long i = 0; i < n; ++i) {
      if (!mcp.is_complementarity[i]) {
        da[i] = 0.0;
        db[i] = 1.0;
        continue;
      }
      const double r = std::hypot(result.z[i], w[i]);
      if (r < 1e-14) {
        const double s = 1.0 / std::sqrt(2.0);
        da[i] = s - 1.0;
        db[i] = s - 1.0;
      } else {
        da[i] = result.z[i] / r - 1.0;
        db[i] = w[i] / r - 1.0;
      }
    }
    Eigen::SparseMatrix<double> jac = db.asDiagonal() * mcp.m;
    jac += Eigen::SparseMatrix<double>(da.asDiagonal() * eye);
    jac.makeCompressed();

    const VectorXd grad = jac.transpose() * phi;  // gradient of theta

    VectorXd direction;
    double slope = 0.0;
    bool have_direction = false;
    newton_lu.compute(jac);
    if (newton_lu.info() == Eigen::Success) {
      direction = newton_lu.solve(-phi);
      if (direction.allFinite()) {
        slope = grad.dot(direction);
        have_direction = slope < 0.0;
      }
    }
    bool used_lm = false;
    const auto lm_direction = [&]() {
      Eigen::SparseMatrix<double> normal = Eigen::SparseMatrix<double>(jac.transpose()) * jac;
      normal += Eigen::SparseMatrix<double>(options.lm_regularization * eye);
      lm_ldlt.compute(normal);
      if (lm_ldlt.info() != Eigen::Success)
        throw ConvergenceError("solve_mcp: regularized Newton system failed to factorize; "
                               "increase lm_regularization",
                               result.residual);
      direction = lm_ldlt.solve(-grad);
      slope = grad.dot(direction);
      have_direction = direction.allFinite() && slope < 0.0;
      used_lm = true;
    };
    if (!have_direction) lm_direction();
    if (!have_direction)
      throw ConvergenceError("solve_mcp: no descent direction; increase lm_regularization",
                             result.residual);

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      const VectorXd m_dir = mcp.m * direction;
      double alpha = 1.0;
      for (int ls = 0; ls <= 30; ++ls) {
        const VectorXd z_try = result.z + alpha * direction;
        const VectorXd w_try = w + alpha * m_dir;
        const VectorXd phi_try = fb_map(mcp, z_try, w_try);
        const double theta_try = 0.5 * phi_try.squaredNorm();
        if (theta_try <= theta + 1e-4 * alpha * slope) {
          result.z = z_try;
          w = w_try;
          phi = phi_try;
          theta = theta_try;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        if (used_lm) break;
        lm_direction();
        if (!have_direction) break;
      }
    }
    if (!accepted)
      throw ConvergenceError("solve_mcp: line search stalled at residual " +
                                 std::to_string(result.residual) +
                                 "; increase lm_regularization",
                             result.residual);
    result.residual = phi.cwiseAbs().maxCoeff();
    result.iterations = iter + 1;
  }

  if (result.residual <= options.accept_tolerance) result.converged = true;
  if (!result.converged)
    throw ConvergenceError("solve_mcp: residual " + std::to_string(result.residual) + " after " +
                               std::to_string(result.iterations) +
                               " iterations; increase max_iterations or lm_regularization",
                           result.residual);
  return result;
}

McpResult solve_mcp(const AffineMcp& mcp, const McpOptions& options) {
  return solve_mcp(mcp, VectorXd::Zero(mcp.size()), options);
}

}  // namespace multikoop
