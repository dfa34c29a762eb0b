#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace screensum {

using real = double;

// Deterministic random source. All draws are derived from the raw 64-bit
// stream so results do not depend on the standard library's distribution
// implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  real uniform() {
    return static_cast<real>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  real uniform(real lo, real hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t uniform_int(uint64_t n) {
    // modulo bias is irrelevant at the scales used here
    return n == 0 ? 0 : engine_() % n;
  }

  // Standard normal via Box-Muller.
  real normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    real u = 1.0 - uniform();
    real v = uniform();
    real r = std::sqrt(-2.0 * std::log(u));
    real theta = 6.283185307179586 * v;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  real spare_ = 0;
};

inline bool all_finite(const std::vector<real>& values) {
  for (real v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace screensum
