#pragma once

#include <Eigen/Sparse>

#include "multikoop/types.hpp"

namespace multikoop {

// Square affine mixed complementarity problem over z with w = M z + q:
//   free rows:            w_i = 0
//   complementarity rows: z_i >= 0, w_i >= 0, z_i * w_i = 0
struct AffineMcp {
  Eigen::SparseMatrix<double> m;
  VectorXd q;
  std::vector<bool> is_complementarity;

  long size() const { return q.size(); }
};

struct McpOptions {
  int max_iterations = 500;
  double tolerance = 1e-10;        // target FB residual (inf norm)
  double accept_tolerance = 1e-8;  // residual still counted as converged at exit
  double lm_regularization = 1e-8;
};

struct McpResult {
  VectorXd z;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Semismooth Newton on the Fischer-Burmeister reformulation with Armijo
// backtracking; falls back to a Levenberg-Marquardt step when the Newton
// direction is unusable. Throws ConvergenceError when the residual stays
// above accept_tolerance.
McpResult solve_mcp(const AffineMcp& mcp, const VectorXd& z0, const McpOptions& options = {});
McpResult solve_mcp(const AffineMcp& mcp, const McpOptions& options = {});

}  // namespace multikoop
