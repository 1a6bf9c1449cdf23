#include "multikoop/dictionary.hpp"

#include <cmath>

#include "multikoop/rng.hpp"

namespace multikoop {

std::string to_string(FeatureKind k) {
  return k == FeatureKind::gaussian_rbf ? "gaussian-rbf" : "polynomial";
}

FeatureKind feature_kind_from_string(const std::string& s) {
  if (s == "gaussian-rbf") return FeatureKind::gaussian_rbf;
  if (s == "polynomial") return FeatureKind::polynomial;
  throw ConfigError("unknown feature kind '" + s + "' (expected gaussian-rbf|polynomial)");
}

namespace {

// Multi-indices over raw_dim variables in graded lex order, total degree >= 2.
std::vector<std::vector<int>> polynomial_exponents(int raw_dim, int count) {
  std::vector<std::vector<int>> out;
  out.reserve(count);
  for (int degree = 2; static_cast<int>(out.size()) < count; ++degree) {
    std::vector<int> e(raw_dim, 0);
    e[0] = degree;
    while (true) {
      out.push_back(e);
      if (static_cast<int>(out.size()) == count) break;
      // next composition of `degree` into raw_dim parts, lex descending
      int i = raw_dim - 2;
      while (i >= 0 && e[i] == 0) --i;
      if (i < 0) break;
      --e[i];
      int rest = degree;
      for (int k = 0; k <= i; ++k) rest -= e[k];
      for (int k = i + 1; k < raw_dim; ++k) e[k] = 0;
      e[i + 1] = rest;
    }
  }
  return out;
}

}  // namespace

DictionarySpec DictionarySpec::make(int raw_dim, int n_nonlinear, FeatureKind kind, double bandwidth,
                                    std::uint64_t seed) {
  if (raw_dim <= 0) throw ConfigError("dictionary raw_dim must be positive");
  if (n_nonlinear < 0) throw ConfigError("dictionary n_nonlinear must be nonnegative");
  if (bandwidth <= 0.0) throw ConfigError("dictionary bandwidth must be positive");
  DictionarySpec spec;
  spec.raw_dim = raw_dim;
  spec.n_nonlinear = n_nonlinear;
  spec.kind = kind;
  spec.bandwidth = bandwidth;
  spec.seed = seed;
  if (kind == FeatureKind::gaussian_rbf) {
    // Centers slightly wider than the [-1,1] sampling box.
    Rng rng(seed);
    spec.centers.resize(n_nonlinear, raw_dim);
    for (int i = 0; i < n_nonlinear; ++i)
      for (int j = 0; j < raw_dim; ++j) spec.centers(i, j) = rng.uniform(-1.2, 1.2);
  } else {
    spec.exponents = polynomial_exponents(raw_dim, n_nonlinear);
  }
  return spec;
}

DictionarySpec DictionarySpec::identity(int raw_dim) {
  return make(raw_dim, 0, FeatureKind::gaussian_rbf, 1.0, 0);
}

VectorXd lift(const DictionarySpec& spec, const Eigen::Ref<const VectorXd>& raw) {
  if (raw.size() != spec.raw_dim)
    throw DimensionError("lift: expected raw vector of length " + std::to_string(spec.raw_dim) + ", got " +
                         std::to_string(raw.size()));
  VectorXd out(spec.lifted_dim());
  out.head(spec.raw_dim) = raw;
  if (spec.kind == FeatureKind::gaussian_rbf) {
    const double inv2bw2 = 1.0 / (2.0 * spec.bandwidth * spec.bandwidth);
    for (int k = 0; k < spec.n_nonlinear; ++k) {
      const double d2 = (raw.transpose() - spec.centers.row(k)).squaredNorm();
      out[spec.raw_dim + k] = std::exp(-d2 * inv2bw2);
    }
  } else {
    for (int k = 0; k < spec.n_nonlinear; ++k) {
      double v = 1.0;
      for (int j = 0; j < spec.raw_dim; ++j)
        for (int p = 0; p < spec.exponents[k][j]; ++p) v *= raw[j];
      out[spec.raw_dim + k] = v;
    }
  }
  return out;
}

std::pair<int, int> state_block(const DictionarySpec& spec) { return {0, spec.raw_dim}; }

MatrixXd state_selector(const DictionarySpec& spec) {
  MatrixXd s = MatrixXd::Zero(spec.raw_dim, spec.lifted_dim());
  s.leftCols(spec.raw_dim).setIdentity();
  return s;
}

}  // namespace multikoop
