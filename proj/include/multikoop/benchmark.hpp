#pragma once

#include <functional>

#include "multikoop/types.hpp"

namespace multikoop {

// Two coupled nonlinear oscillator agents. Flat layout (dim 4):
//   [x11 x12 x21 x22]
// Hierarchical layout (dim 10), slow/fast/actuator per agent:
//   [x11 x12 x21 x22 y11 y12 y21 y22 w1 w2]
inline constexpr int kNumAgents = 2;
inline constexpr int kFlatDim = 4;
inline constexpr int kHierDim = 10;
inline constexpr int kSlowDimPerAgent = 2;
inline constexpr int kFastDimPerAgent = 2;

// Slow step dt_slow = m * tau; the fast subsystem runs m times faster.
struct ScaleConfig {
  double dt_slow = 0.1;
  int m = 100;

  double tau() const { return dt_slow / m; }
  void validate() const {
    if (dt_slow <= 0.0) throw ConfigError("scale: dt_slow must be positive");
    if (m < 2) throw ConfigError("scale: time-scale ratio m must be >= 2");
  }
};

VectorXd rhs_flat(const Eigen::Ref<const VectorXd>& state, const Eigen::Ref<const VectorXd>& u);
VectorXd rhs_hier(const Eigen::Ref<const VectorXd>& state, const Eigen::Ref<const VectorXd>& u,
                  const ScaleConfig& scale);

struct Trajectory {
  VectorXd times;     // recorded instants, strictly increasing
  MatrixXd states;    // rows aligned with times
  MatrixXd controls;  // rows aligned with times (control active at that instant)
  Variant variant = Variant::flat;

  int steps() const { return static_cast<int>(times.size()); }
};

using RhsFn = std::function<VectorXd(const VectorXd&, const VectorXd&)>;

// Classical fixed-step RK4. Controls are held constant over each slow
// interval dt_slow (row t of `controls` is active on [t*dt_slow, (t+1)*dt_slow)).
// Integration uses `substeps` RK4 steps per slow interval; the state is
// recorded every `record_every` RK4 steps (and always at t=0 and the end).
// Throws DivergenceError when the state max-norm exceeds 1e6.
Trajectory integrate(const RhsFn& rhs, const VectorXd& x0, const MatrixXd& controls, double dt_slow,
                     int n_slow_steps, int substeps, int record_every = 1);

// Benchmark-specific conveniences.
Trajectory simulate_flat(const VectorXd& x0, const MatrixXd& controls, double dt_slow, int n_slow_steps,
                         int substeps = 10);
Trajectory simulate_hier(const VectorXd& x0, const MatrixXd& controls, const ScaleConfig& scale,
                         int n_slow_steps);

}  // namespace multikoop
