// Counter-based 64-bit pseudo-random number generator.
//
// All dataset generators and feature samplers draw from this generator so
// that outputs are bit-identical across platforms, compilers, and thread
// counts. std::mt19937_64 and the distributions of <random> are not used for
// data generation because their streams are not portable across standard
// library implementations.
//
// Construction: the key is derived from (seed, stream) via the SplitMix64
// finalizer; draw i returns finalize(key + i * 0x9E3779B97F4A7C15). The
// generator state is therefore a pure function of (seed, stream, draw
// count), which makes substreams cheap: give each trajectory or run its own
// stream index and the draws are independent of scheduling order.

#pragma once

#include <cstdint>
#include <vector>

namespace randsmap {

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  // Next 64 uniform bits.
  std::uint64_t next_u64();

  // Uniform double in [0, 1) with 53-bit resolution.
  double uniform();

  // Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  // Standard normal via the Box-Muller transform. Each call consumes exactly
  // two uniforms and returns the cosine branch; the sine branch is discarded
  // so that the stream position stays a pure function of the draw count.
  double normal();

  double normal(double mean, double stddev);

  // Uniform integer in [0, n). Computed as floor(uniform() * n); the modulo
  // bias is below 2^-53 and accepted for the sake of a fixed draw count.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Seeded Fisher-Yates permutation of {0, ..., n-1}.
std::vector<std::size_t> random_permutation(std::size_t n, CounterRng& rng);

}  // namespace randsmap
