#include "multikoop/benchmark.hpp"

#include <cmath>
#include <string>

namespace multikoop {

namespace {

void check_finite(const Eigen::Ref<const VectorXd>& v, const char* what) {
  if (!v.allFinite()) throw DataError(std::string(what) + ": non-finite input");
}

}  // namespace

VectorXd rhs_flat(const Eigen::Ref<const VectorXd>& state, const Eigen::Ref<const VectorXd>& u) {
  if (state.size() != kFlatDim) throw DimensionError("rhs_flat: state must have length 4");
  if (u.size() != kNumAgents) throw DimensionError("rhs_flat: u must have length 2");
  check_finite(state, "rhs_flat");
  check_finite(u, "rhs_flat");
  const double x11 = state[0], x12 = state[1], x21 = state[2], x22 = state[3];
  VectorXd dx(kFlatDim);
  dx[0] = x12;
  dx[1] = -(1.0 - x11 * x11) * x12 - x11 + 0.25 * std::sinh(x21) + 0.5 * u[0];
  dx[2] = x22;
  dx[3] = -std::sinh(x22) - std::sin(x21) + 0.5 * std::tanh(x12) + 0.5 * u[1];
  return dx;
}

VectorXd rhs_hier(const Eigen::Ref<const VectorXd>& state, const Eigen::Ref<const VectorXd>& u,
                  const ScaleConfig& scale) {
  if (state.size() != kHierDim) throw DimensionError("rhs_hier: state must have length 10");
  if (u.size() != kNumAgents) throw DimensionError("rhs_hier: u must have length 2");
  check_finite(state, "rhs_hier");
  check_finite(u, "rhs_hier");
  const double rate = static_cast<double>(scale.m);
  const double x11 = state[0], x12 = state[1], x21 = state[2], x22 = state[3];
  const double y11 = state[4], y12 = state[5], y21 = state[6], y22 = state[7];
  const double w1 = state[8], w2 = state[9];
  VectorXd dx(kHierDim);
  // slow: fast position y_{i,1} replaces the flat control term
  dx[0] = x12;
  dx[1] = -(1.0 - x11 * x11) * x12 - x11 + 0.25 * std::sinh(x21) + 0.5 * y11;
  dx[2] = x22;
  dx[3] = -std::sinh(x22) - std::sin(x21) + 0.5 * std::tanh(x12) + 0.5 * y21;
  // fast oscillators, driven by actuators and the slow kinetic energy
  dx[4] = rate * y12;
  dx[5] = rate * (-2.0 * y12 - y11 - y11 * y11 * y11 - 2.0 * w1 + 0.5 * x12 * x12);
  dx[6] = rate * y22;
  dx[7] = rate * (-2.0 * y22 - y21 - y21 * y21 * y21 - 2.0 * w2 + 0.5 * x22 * x22);
  // PI actuator loops driving y_{i,1} toward u_i
  dx[8] = rate * (y12 + (y11 - u[0]));
  dx[9] = rate * (y22 + (y21 - u[1]));
  return dx;
}

Trajectory integrate(const RhsFn& rhs, const VectorXd& x0, const MatrixXd& controls, double dt_slow,
                     int n_slow_steps, int substeps, int record_every) {
  if (dt_slow <= 0.0) throw ConfigError("integrate: dt_slow must be positive");
  if (substeps < 1) throw ConfigError("integrate: substeps must be >= 1");
  if (record_every < 1) throw ConfigError("integrate: record_every must be >= 1");
  if (controls.rows() < n_slow_steps)
    throw DimensionError("integrate: need one control row per slow step (" + std::to_string(n_slow_steps) +
                         "), got " + std::to_string(controls.rows()));
  const double h = dt_slow / substeps;
  const long total = static_cast<long>(n_slow_steps) * substeps;
  const long n_records = total / record_every + 1 + (total % record_every != 0 ? 1 : 0);

  Trajectory traj;
  traj.times.resize(n_records);
  traj.states.resize(n_records, x0.size());
  traj.controls.resize(n_records, controls.cols());

  VectorXd x = x0;
  long rec = 0;
  auto record = [&](long step) {
    traj.times[rec] = step * h;
    traj.states.row(rec) = x.transpose();
    const int slow = std::min<long>(step / substeps, n_slow_steps - 1);
    traj.controls.row(rec) = controls.row(slow);
    ++rec;
  };
  record(0);
  VectorXd k1, k2, k3, k4;
  for (long step = 0; step < total; ++step) {
    const VectorXd u = controls.row(step / substeps).transpose();
    k1 = rhs(x, u);
    k2 = rhs(x + 0.5 * h * k1, u);
    k3 = rhs(x + 0.5 * h * k2, u);
    k4 = rhs(x + h * k3, u);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e6) {
      const double t = (step + 1) * h;
      throw DivergenceError("trajectory diverged at t=" + std::to_string(t), t);
    }
    if ((step + 1) % record_every == 0 || step + 1 == total) record(step + 1);
  }
  traj.times.conservativeResize(rec);
  traj.states.conservativeResize(rec, Eigen::NoChange);
  traj.controls.conservativeResize(rec, Eigen::NoChange);
  return traj;
}

Trajectory simulate_flat(const VectorXd& x0, const MatrixXd& controls, double dt_slow, int n_slow_steps,
                         int substeps) {
  auto traj = integrate([](const VectorXd& s, const VectorXd& u) { return rhs_flat(s, u); }, x0, controls,
                        dt_slow, n_slow_steps, substeps, substeps);
  traj.variant = Variant::flat;
  return traj;
}

Trajectory simulate_hier(const VectorXd& x0, const MatrixXd& controls, const ScaleConfig& scale,
                         int n_slow_steps) {
  scale.validate();
  // step tau/10; record at the fast sampling spacing tau
  const int substeps = 10 * scale.m;
  auto traj = integrate([&scale](const VectorXd& s, const VectorXd& u) { return rhs_hier(s, u, scale); }, x0,
                        controls, scale.dt_slow, n_slow_steps, substeps, 10);
  traj.variant = Variant::hier;
  return traj;
}

}  // namespace multikoop
