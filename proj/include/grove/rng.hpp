#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace grove {

// SplitMix64 finalizer. Used to derive well-separated seeds for sub-runs.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for the `index`-th sub-run of stream `stream` under a master seed.
// Sub-runs (forest trees, repeated-seed batches) seeded this way depend
// only on (master, index, stream), never on the thread schedule.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index,
                              std::uint64_t stream = 0) {
  return splitmix64(splitmix64(splitmix64(master) ^ index) ^ stream);
}

// Deterministic RNG. Every draw is coded out explicitly (no std
// distribution objects, whose outputs may differ between standard library
// implementations), so a seed fully determines the stream of results.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform in {0, ..., n-1}; n >= 1. Rejection sampling keeps it unbiased.
  std::size_t uniform_index(std::size_t n) {
    if (n <= 1) return 0;
    const std::uint64_t range = n;
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return static_cast<std::size_t>(v % range);
  }

  double uniform_real(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace grove
