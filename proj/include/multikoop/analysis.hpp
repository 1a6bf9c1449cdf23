#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vendor/json.hpp"

#include "multikoop/koopman.hpp"
#include "multikoop/reduction.hpp"

namespace multikoop {

// log of the largest singular value: maximum initial transient growth.
double initial_growth(const MatrixXd& a);

struct KreissOptions {
  int n_radii = 64;    // log-spaced radii in (1, 10]
  int n_angles = 256;
  int refine_passes = 2;
};

struct KreissResult {
  double value = 1.0;
  double z_abs = 0.0, z_arg = 0.0;  // maximizer found by the grid search
  bool boundary_warning = false;    // refinement pushed against the outer radius
};

// sup over |z| > 1 of (|z| - 1) ||(zI - A)^-1||_2, a lower bound on the
// maximum transient growth. Evaluated on a log-radial grid with local
// refinement; the |z| -> infinity limit of the objective is 1, so the result
// is floored at 1. Requires rho(A) < 1.
KreissResult kreiss_bound(const MatrixXd& a, const KreissOptions& options = {});

// Symmetric X with F X F^T - X = -RHS. Dense vec-LU for n <= 40, doubling
// iteration beyond. Requires rho(F) < 1 and symmetric RHS.
MatrixXd solve_discrete_lyapunov(const MatrixXd& f, const MatrixXd& rhs);

struct GramianResult {
  MatrixXd x;
  double norm = 0.0;  // spectral norm
};

// Cross-agent gramian: Lyapunov solve with the given state matrix and input
// matrix (I - K_ii) K_ij (the same input whether f is K_xx_ii or B_xx_i).
GramianResult gramian_cross(const MatrixXd& f, const MatrixXd& input);
GramianResult gramian_cross(const StructuredKoopman& model, int i, int j);
GramianResult gramian_cross(const ReducedModel& reduced, int i, int j);

// Control gramian of the stacked system with only the chosen agents'
// control columns active (zero columns for the rest).
GramianResult gramian_control(const CombinedSystem& sys, const std::vector<int>& agents);

struct PerturbationOptions {
  int k_start = 200;
  int k_cap = 5000;
  double decay_tol = 1e-6;  // extend while the per-k value exceeds this times the running max
};

// max over k in [1, k_max] of the squared largest singular value of the
// agent-j column block of A^k: the worst k-step energy gain from a unit
// perturbation confined to agent j.
double perturbation_gain(const MatrixXd& a, int col_begin, int col_dim,
                         const PerturbationOptions& options = {});
double perturbation_gain(const CombinedSystem& sys, int agent,
                         const PerturbationOptions& options = {});

// One table column (one state matrix) of the analysis report. Metrics that
// are undefined for the matrix are absent; metrics whose computation failed
// carry the error text instead.
struct MetricsEntry {
  std::string matrix;
  std::optional<double> initial_growth;
  std::optional<double> t_bound;
  bool t_bound_boundary_warning = false;
  std::optional<double> gramian_cross_norm;    // impact of the other agent on this one
  std::optional<double> gramian_control_norm;  // this agent's control authority
  std::optional<double> p_max;                 // perturbation gain of this agent's block
  std::vector<std::string> errors;
};

struct MetricsReport {
  std::vector<MetricsEntry> entries;
  nlohmann::json metadata;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

// Computes the full metric set. Flat models produce per-agent and combined
// columns; hierarchical models produce K_xx_ii / K_comb / B_xx_i / B_comb
// columns (pass the reduced model).
MetricsReport analyze(const StructuredKoopman& model, const ReducedModel* reduced = nullptr);

}  // namespace multikoop
