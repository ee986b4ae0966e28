#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace fairboard {

// Seeded generator used by every stochastic stage.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The standard distributions are implementation-defined, so the
// draws below are derived from raw engine output:
//   uniform()  - top 53 bits scaled to [0, 1)
//   index(n)   - rejection sampling on the raw 64-bit output
//   normal()   - Marsaglia polar method
// Independent streams (bootstrap iteration i, permutation j) are seeded with
// derive_seed(seed, i), a SplitMix64 mix, so results do not depend on the
// order in which streams are consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();
  std::size_t index(std::size_t n);
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  bool coin() { return (next() >> 63) != 0; }

  template <class It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::size_t>(last - first);
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = index(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace fairboard
