#include "multikoop/dataset.hpp"

#include <vector>

#include "multikoop/matrix_archive.hpp"
#include "multikoop/parallel.hpp"
#include "multikoop/rng.hpp"

namespace multikoop {

namespace {

constexpr int kSlowOffset = 0;
constexpr int kFastOffset = kNumAgents * kSlowDimPerAgent;
constexpr int kActuatorOffset = kFastOffset + kNumAgents * kFastDimPerAgent;

VectorXd slow_part(const Eigen::Ref<const VectorXd>& state, int agent) {
  return state.segment(kSlowOffset + kSlowDimPerAgent * agent, kSlowDimPerAgent);
}
VectorXd fast_part(const Eigen::Ref<const VectorXd>& state, int agent) {
  return state.segment(kFastOffset + kFastDimPerAgent * agent, kFastDimPerAgent);
}
VectorXd actuator_part(const Eigen::Ref<const VectorXd>& state, int agent) {
  return state.segment(kActuatorOffset + agent, 1);
}

}  // namespace

DictionarySet make_benchmark_dictionaries(Variant variant, std::uint64_t seed, int n_x_features,
                                          int n_y_features, int n_w_features, double bandwidth) {
  DictionarySet set;
  set.variant = variant;
  for (int agent = 0; agent < kNumAgents; ++agent) {
    auto stream = [&](int group) { return Rng::derive(seed, 10 * agent + group); };
    set.x.push_back(DictionarySpec::make(kSlowDimPerAgent, n_x_features, FeatureKind::gaussian_rbf,
                                         bandwidth, stream(0)));
    set.u.push_back(DictionarySpec::identity(1));
    if (variant == Variant::hier) {
      set.y.push_back(DictionarySpec::make(kFastDimPerAgent, n_y_features, FeatureKind::gaussian_rbf,
                                           bandwidth, stream(1)));
      set.w.push_back(DictionarySpec::make(1, n_w_features, FeatureKind::gaussian_rbf, bandwidth,
                                           stream(2)));
    }
  }
  return set;
}

SnapshotDataset generate_dataset(Variant variant, int n_ic, const ScaleConfig& scale,
                                 std::uint64_t seed, const DictionarySet& dicts) {
  if (n_ic < 1) throw ConfigError("generate_dataset: n_ic must be >= 1");
  if (dicts.variant != variant) throw ConfigError("generate_dataset: dictionary set variant mismatch");
  scale.validate();

  const int raw_dim = variant == Variant::flat ? kFlatDim : kHierDim;
  const int m = scale.m;

  struct Sample {
    bool ok = false;
    // Per agent, lifted records.
    std::vector<VectorXd> psi_x, psi_x_next, psi_u;
    std::vector<MatrixXd> fast_y, fast_w;  // (m+1) rows at tau spacing
  };
  std::vector<Sample> samples(n_ic);

  parallel_for(n_ic, [&](long idx) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(idx)));
    VectorXd x0(raw_dim);
    for (int d = 0; d < raw_dim; ++d) x0[d] = rng.uniform(-1.0, 1.0);
    MatrixXd controls(1, kNumAgents);
    for (int a = 0; a < kNumAgents; ++a) controls(0, a) = rng.uniform(-1.0, 1.0);

    Trajectory traj;
    try {
      traj = variant == Variant::flat ? simulate_flat(x0, controls, scale.dt_slow, 1)
                                      : simulate_hier(x0, controls, scale, 1);
    } catch (const DivergenceError&) {
      return;  // discarded; samples[idx].ok stays false
    }

    Sample s;
    s.ok = true;
    const VectorXd first = traj.states.row(0);
    const VectorXd last = traj.states.row(traj.steps() - 1);
    for (int a = 0; a < kNumAgents; ++a) {
      s.psi_x.push_back(lift(dicts.x[a], slow_part(first, a)));
      s.psi_x_next.push_back(lift(dicts.x[a], slow_part(last, a)));
      s.psi_u.push_back(lift(dicts.u[a], controls.row(0).segment(a, 1)));
      if (variant == Variant::hier) {
        MatrixXd fy(m + 1, dicts.y[a].lifted_dim());
        MatrixXd fw(m + 1, dicts.w[a].lifted_dim());
        for (int n = 0; n <= m; ++n) {
          const VectorXd row = traj.states.row(n);
          fy.row(n) = lift(dicts.y[a], fast_part(row, a));
          fw.row(n) = lift(dicts.w[a], actuator_part(row, a));
        }
        s.fast_y.push_back(std::move(fy));
        s.fast_w.push_back(std::move(fw));
      }
    }
    samples[idx] = std::move(s);
  });

  int n_ok = 0;
  for (const auto& s : samples) n_ok += s.ok ? 1 : 0;
  const int n_discarded = n_ic - n_ok;
  if (n_discarded * 10 > n_ic)
    throw DataError("generate_dataset: " + std::to_string(n_discarded) + " of " +
                    std::to_string(n_ic) + " initial conditions diverged (>10%)");

  SnapshotDataset ds;
  ds.variant = variant;
  ds.n_samples = n_ok;
  ds.n_discarded = n_discarded;
  ds.m = variant == Variant::hier ? m : 0;
  ds.seed = seed;
  ds.agents.resize(kNumAgents);
  for (int a = 0; a < kNumAgents; ++a) {
    auto& ag = ds.agents[a];
    const int dx = dicts.x[a].lifted_dim();
    const int du = dicts.u[a].lifted_dim();
    ag.psi_x.resize(n_ok, dx);
    ag.psi_x_next.resize(n_ok, dx);
    ag.psi_u.resize(n_ok, du);
    if (variant == Variant::hier) {
      const int dy = dicts.y[a].lifted_dim();
      const int dw = dicts.w[a].lifted_dim();
      ag.psi_y_bar.resize(n_ok, dy);
      ag.psi_w_bar.resize(n_ok, dw);
      ag.fast_y.resize(static_cast<long>(n_ok) * m, dy);
      ag.fast_y_next.resize(static_cast<long>(n_ok) * m, dy);
      ag.fast_w.resize(static_cast<long>(n_ok) * m, dw);
      ag.fast_w_next.resize(static_cast<long>(n_ok) * m, dw);
    }
    int row = 0;
    for (const auto& s : samples) {
      if (!s.ok) continue;
      ag.psi_x.row(row) = s.psi_x[a];
      ag.psi_x_next.row(row) = s.psi_x_next[a];
      ag.psi_u.row(row) = s.psi_u[a];
      if (variant == Variant::hier) {
        const MatrixXd& fy = s.fast_y[a];
        const MatrixXd& fw = s.fast_w[a];
        ag.psi_y_bar.row(row) = fy.topRows(m).colwise().mean();
        ag.psi_w_bar.row(row) = fw.topRows(m).colwise().mean();
        ag.fast_y.middleRows(static_cast<long>(row) * m, m) = fy.topRows(m);
        ag.fast_y_next.middleRows(static_cast<long>(row) * m, m) = fy.bottomRows(m);
        ag.fast_w.middleRows(static_cast<long>(row) * m, m) = fw.topRows(m);
        ag.fast_w_next.middleRows(static_cast<long>(row) * m, m) = fw.bottomRows(m);
      }
      ++row;
    }
  }
  return ds;
}

void SnapshotDataset::save(const std::string& path) const {
  MatrixArchive ar;
  ar.meta["format"] = "snapshot-dataset";
  ar.meta["variant"] = to_string(variant);
  ar.meta["n_samples"] = n_samples;
  ar.meta["n_discarded"] = n_discarded;
  ar.meta["m"] = m;
  ar.meta["seed"] = seed;
  ar.meta["n_agents"] = agents.size();
  for (std::size_t a = 0; a < agents.size(); ++a) {
    const std::string p = "agent" + std::to_string(a) + ".";
    const auto& ag = agents[a];
    ar.add(p + "psi_x", ag.psi_x);
    ar.add(p + "psi_x_next", ag.psi_x_next);
    ar.add(p + "psi_u", ag.psi_u);
    if (variant == Variant::hier) {
      ar.add(p + "psi_y_bar", ag.psi_y_bar);
      ar.add(p + "psi_w_bar", ag.psi_w_bar);
      ar.add(p + "fast_y", ag.fast_y);
      ar.add(p + "fast_y_next", ag.fast_y_next);
      ar.add(p + "fast_w", ag.fast_w);
      ar.add(p + "fast_w_next", ag.fast_w_next);
    }
  }
  ar.save(path);
}

SnapshotDataset SnapshotDataset::load(const std::string& path) {
  MatrixArchive ar = MatrixArchive::load(path);
  if (ar.meta.value("format", "") != "snapshot-dataset")
    throw IoError("dataset load: " + path + " is not a snapshot-dataset archive");
  SnapshotDataset ds;
  ds.variant = variant_from_string(ar.meta.at("variant").get<std::string>());
  ds.n_samples = ar.meta.at("n_samples").get<int>();
  ds.n_discarded = ar.meta.at("n_discarded").get<int>();
  ds.m = ar.meta.at("m").get<int>();
  ds.seed = ar.meta.at("seed").get<std::uint64_t>();
  ds.agents.resize(ar.meta.at("n_agents").get<std::size_t>());
  for (std::size_t a = 0; a < ds.agents.size(); ++a) {
    const std::string p = "agent" + std::to_string(a) + ".";
    auto& ag = ds.agents[a];
    ag.psi_x = ar.get(p + "psi_x");
    ag.psi_x_next = ar.get(p + "psi_x_next");
    ag.psi_u = ar.get(p + "psi_u");
    if (ds.variant == Variant::hier) {
      ag.psi_y_bar = ar.get(p + "psi_y_bar");
      ag.psi_w_bar = ar.get(p + "psi_w_bar");
      ag.fast_y = ar.get(p + "fast_y");
      ag.fast_y_next = ar.get(p + "fast_y_next");
      ag.fast_w = ar.get(p + "fast_w");
      ag.fast_w_next = ar.get(p + "fast_w_next");
    }
  }
  return ds;
}

}  // namespace multikoop
