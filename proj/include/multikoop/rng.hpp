#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace multikoop {

// Deterministic RNG wrapper. mt19937_64 has a standardized sequence and the
// uniform/normal mappings below avoid the implementation-defined std
// distributions, so equal seeds give bit-identical draws on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53-bit resolution.
  double u01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  // Box-Muller; second value cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = u01(), u2 = u01();
    while (u1 <= 0.0) u1 = u01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::uint64_t next_u64() { return engine_(); }

  // splitmix64 mix of (base, stream): independent per-stream seeds for
  // parallel workers, stable under any scheduling.
  static std::uint64_t derive(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace multikoop
