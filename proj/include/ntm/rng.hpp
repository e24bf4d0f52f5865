#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ntm/tensor.hpp"

namespace ntm {

// Seeded generator whose derived draws (uniform, normal, shuffles) are
// computed here rather than by <random> distributions, so sequences are the
// same on every standard library. The full state is the engine state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal via Box-Muller, one draw per call.
  double normal();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  Tensor normal_tensor(std::size_t rows, std::size_t cols, double stddev = 1.0);
  Tensor uniform_tensor(std::size_t rows, std::size_t cols, double lo, double hi);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

  std::string state() const;
  void restore(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer over (seed, stream); used to derive independent
// sub-streams such as per-epoch shuffles.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace ntm
