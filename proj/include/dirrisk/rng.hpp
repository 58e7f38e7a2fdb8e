#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace dirrisk {

/// Address of an independent random sequence. Identical (seed, stream) pairs
/// always produce identical sequences; child streams are derived by hashing,
/// so work item i can own stream child(i) regardless of scheduling.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  RngStream child(std::uint64_t index) const;

  friend bool operator==(const RngStream&, const RngStream&) = default;
};

/// xoshiro256++ bit generator seeded from an RngStream through SplitMix64.
/// Cheap to construct, which matters because estimators create one per draw.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(RngStream stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Standard normal variate.
  double gaussian() { return normal_(*this); }
  /// Uniform variate in [0, 1).
  double uniform() { return uniform_(*this); }

 private:
  std::uint64_t s_[4];
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace dirrisk
