#pragma once

#include <string>
#include <vector>

#include "multikoop/dataset.hpp"
#include "multikoop/koopman.hpp"

namespace multikoop {

struct FitOptions {
  double ridge = 1e-8;          // on the sample-averaged Gram matrix
  double rho_target = 0.999;
  bool zero_xw_blocks = true;   // benchmark domain knowledge: K_xw = K_wx = 0
  int min_samples_factor = 10;  // samples required per regression unknown column
};

// Per-regression diagnostics. grad_max is the max-norm gradient of the
// sample-averaged ridge objective at the returned coefficients; rho_raw and
// rho_projected bracket the stability projection of the self block.
struct BlockFitStats {
  std::string name;
  long n_samples = 0;
  double rms_residual = 0.0;
  double grad_max = 0.0;
  double rho_raw = 0.0;
  double rho_projected = 0.0;
};

struct FitReport {
  std::vector<BlockFitStats> blocks;
  std::vector<std::string> warnings;

  double max_grad() const {
    double g = 0.0;
    for (const auto& b : blocks) g = std::max(g, b.grad_max);
    return g;
  }
};

// Least-squares fit of the self-centered dynamics via the linear
// reparametrization psi_next = A psi + sum_j C_j r_j, followed by factor
// recovery K_j = (I - A)^{-1} C_j and stability projection of A.
StructuredKoopman fit_flat(const SnapshotDataset& data, const DictionarySet& dicts,
                           const FitOptions& options = {}, FitReport* report = nullptr);

StructuredKoopman fit_hier(const SnapshotDataset& data, const DictionarySet& dicts,
                           const ScaleConfig& scale, const FitOptions& options = {},
                           FitReport* report = nullptr);

}  // namespace multikoop
