#pragma once

// SplitMix64 (Steele, Lea & Flood 2014) with a fixed output-to-double
// mapping, so every draw is reproducible across platforms from the seed alone.
// Library distributions from <random> are deliberately not used: their
// algorithms are implementation-defined.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

namespace optail {

inline constexpr const char* kRngAlgorithm = "splitmix64";

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of the stream (root, stream, index):
///   mix(mix(mix(root) ^ (stream * G)) ^ (index * G)),  G = 0x9e3779b97f4a7c15.
inline constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream,
                                           std::uint64_t index) {
  constexpr std::uint64_t golden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = splitmix64_mix(root);
  z = splitmix64_mix(z ^ (stream * golden));
  return splitmix64_mix(z ^ (index * golden));
}

class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64_mix(state_);
  }

  /// Uniform on [0, 1) with 53 bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n); multiply-shift with rejection (Lemire).
  std::uint64_t below(std::uint64_t n) {
    while (true) {
      const unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
      const auto low = static_cast<std::uint64_t>(m);
      if (low >= n || low >= (0 - n) % n) return static_cast<std::uint64_t>(m >> 64);
    }
  }

  /// Index drawn from a probability vector by inverse CDF; zero-mass entries are never chosen.
  int categorical(std::span<const double> probs) {
    const double u = uniform();
    double acc = 0.0;
    int last = -1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      acc += probs[i];
      last = static_cast<int>(i);
      if (u < acc) return last;
    }
    return last;
  }

  /// Standard exponential variate.
  double exponential() { return -std::log1p(-uniform()); }

 private:
  std::uint64_t state_;
};

/// Stream identifiers used by derive_seed.
enum class SeedStream : std::uint64_t {
  environment = 1,
  expert_demos = 2,
  learner_rollouts = 3,
  solver = 4,
};

inline std::uint64_t derive_seed(std::uint64_t root, SeedStream stream, std::uint64_t index) {
  return derive_seed(root, static_cast<std::uint64_t>(stream), index);
}

}  // namespace optail
