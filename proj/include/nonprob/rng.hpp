#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "nonprob/errors.hpp"

namespace nonprob {

// splitmix64; used both as a generator step and to derive independent
// per-replicate seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
  std::uint64_t s = master ^ (0x5851f42d4c957f2dULL * (counter + 1));
  return splitmix64(s);
}

// Small deterministic generator (xoshiro256**). Self-contained so that
// streams do not depend on the standard library's distribution
// implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& s : state_) s = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller.
  double gaussian() {
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  // Index draw proportional to the given nonnegative weights.
  std::size_t categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0)
      throw estimation_error("degenerate-weights", "all categorical weights are zero");
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.size() - 1;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

// Sequential weighted draws without replacement: repeatedly draw an index
// proportional to the remaining weights.
inline std::vector<std::size_t> weighted_sample_without_replacement(
    Rng& rng, const std::vector<double>& weights, std::size_t m) {
  const std::size_t n = weights.size();
  std::vector<double> remaining = weights;
  std::vector<std::size_t> picked;
  picked.reserve(m);
  for (std::size_t draw = 0; draw < m; ++draw) {
    std::size_t idx = rng.categorical(remaining);
    picked.push_back(idx);
    remaining[idx] = 0.0;
  }
  return picked;
}

}  // namespace nonprob
