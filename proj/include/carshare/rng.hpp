#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace carshare {

// splitmix64 finalizer; used to derive independent per-item streams from a
// master seed so that parallel generation order never changes results.
constexpr std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Thin wrapper around mt19937_64. Distribution sampling is done by hand
// (not <random> distributions) so the draws are identical across standard
// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi].
  long long integer(long long lo, long long hi) {
    auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<long long>(engine_() % span);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Index drawn proportionally to the (non-negative) weights. Returns
  // weights.size() if all weights are zero.
  std::size_t discrete(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) return weights.size();
    double u = uniform() * total;
    double acc = 0.0;
    std::size_t last = weights.size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      acc += weights[i];
      last = i;
      if (u < acc) return i;
    }
    return last;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace carshare
