#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "multikoop/benchmark.hpp"
#include "multikoop/dictionary.hpp"
#include "multikoop/types.hpp"

namespace multikoop {

// One dictionary per agent and variable group. Controls use the identity
// lift. y/w entries are empty for the flat variant.
struct DictionarySet {
  Variant variant = Variant::flat;
  std::vector<DictionarySpec> x;
  std::vector<DictionarySpec> y;
  std::vector<DictionarySpec> w;
  std::vector<DictionarySpec> u;

  int n_agents() const { return static_cast<int>(x.size()); }
};

// Benchmark defaults: 12 nonlinear RBF features on each 2-dim slow state,
// 12 on each 2-dim fast state, 4 on each scalar actuator; controls unlifted.
DictionarySet make_benchmark_dictionaries(Variant variant, std::uint64_t seed, int n_x_features = 12,
                                          int n_y_features = 12, int n_w_features = 4,
                                          double bandwidth = 1.0);

// Lifted snapshot pairs for one agent.
//
// Slow rows are indexed by accepted sample; psi_x/psi_x_next bracket one
// slow step of length dt_slow with the control held constant. Hierarchical
// datasets add, per sample, m fast substep pairs at spacing tau (row layout
// sample*m + n, n in [0, m)) and the within-window averages of the fast
// observables over n = 0..m-1 used by the slow-step regression.
struct AgentSnapshots {
  MatrixXd psi_x, psi_x_next;  // n_samples x dim_x
  MatrixXd psi_u;              // n_samples x dim_u
  MatrixXd psi_y_bar, psi_w_bar;
  MatrixXd fast_y, fast_y_next;  // (n_samples*m) x dim_y
  MatrixXd fast_w, fast_w_next;  // (n_samples*m) x dim_w
};

struct SnapshotDataset {
  Variant variant = Variant::flat;
  int n_samples = 0;
  int n_discarded = 0;
  int m = 0;  // fast substeps per slow step (hier only)
  std::uint64_t seed = 0;
  std::vector<AgentSnapshots> agents;

  void save(const std::string& path) const;
  static SnapshotDataset load(const std::string& path);
};

// Simulates n_ic random initial conditions from [-1,1]^n one slow step
// forward (controls i.i.d. uniform on [-1,1]) and lifts the records.
// Per-sample RNG streams are derived from (seed, index), so the result is
// independent of worker scheduling. Divergent samples are discarded and
// counted; more than 10% discarded is an error.
SnapshotDataset generate_dataset(Variant variant, int n_ic, const ScaleConfig& scale,
                                 std::uint64_t seed, const DictionarySet& dicts);

}  // namespace multikoop
