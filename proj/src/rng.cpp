#include "ntm/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "ntm/error.hpp"

namespace ntm {

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw ContractError("Rng::below requires n > 0");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t draw;
  do {
    draw = engine_();
  } while (draw >= limit);
  return draw % n;
}

Tensor Rng::normal_tensor(std::size_t rows, std::size_t cols, double stddev) {
  Tensor t(rows, cols);
  for (double& v : t.values()) v = stddev * normal();
  return t;
}

Tensor Rng::uniform_tensor(std::size_t rows, std::size_t cols, double lo, double hi) {
  Tensor t(rows, cols);
  for (double& v : t.values()) v = uniform(lo, hi);
  return t;
}

std::string Rng::state() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

void Rng::restore(const std::string& state) {
  std::istringstream in(state);
  in >> engine_;
  if (!in) throw ContractError("invalid random generator state");
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace ntm
