#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "multikoop/types.hpp"

namespace multikoop {

enum class FeatureKind { gaussian_rbf, polynomial };

std::string to_string(FeatureKind k);
FeatureKind feature_kind_from_string(const std::string& s);

// State-inclusive observable dictionary: lift(x) = [x; phi(x)].
//
// gaussian-rbf: phi_k(x) = exp(-|x - c_k|^2 / (2 bw^2)) with centers c_k drawn
// uniformly from [-1.2, 1.2]^raw_dim by the given seed.
// polynomial: phi_k(x) = prod_d x_d^{e_kd}, multi-indices enumerated in graded
// lexicographic order starting at total degree 2 (degree-1 terms are the raw
// states themselves).
struct DictionarySpec {
  int raw_dim = 0;
  int n_nonlinear = 0;
  FeatureKind kind = FeatureKind::gaussian_rbf;
  MatrixXd centers;  // n_nonlinear x raw_dim (rbf only)
  double bandwidth = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::vector<int>> exponents;  // n_nonlinear rows (polynomial only)

  int lifted_dim() const { return raw_dim + n_nonlinear; }

  static DictionarySpec make(int raw_dim, int n_nonlinear, FeatureKind kind = FeatureKind::gaussian_rbf,
                             double bandwidth = 1.0, std::uint64_t seed = 0);

  // Identity lift (controls are kept unlifted).
  static DictionarySpec identity(int raw_dim);
};

VectorXd lift(const DictionarySpec& spec, const Eigen::Ref<const VectorXd>& raw);

// Index range [first, last) of the raw-state components inside the lifted
// vector. State-inclusive layout puts them first.
std::pair<int, int> state_block(const DictionarySpec& spec);

// Selector matrix S (raw_dim x lifted_dim) with S * lift(x) = x.
MatrixXd state_selector(const DictionarySpec& spec);

}  // namespace multikoop
