#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hubnet/types.hpp"

namespace hubnet {

// xoshiro256++ with splitmix64 state initialization. <random> engines would
// do, but normal/shuffle distributions are implementation-defined across
// standard libraries and would break seed-for-seed reproducibility, so the
// few primitives needed are spelled out here.
class Rng {
 public:
  explicit Rng(Seed seed);

  std::uint64_t next_u64();

  // Uniform on the open interval (0,1): (x >> 11 + 0.5) * 2^-53. Never
  // returns 0 or 1, so log() and Box-Muller are safe.
  double uniform();
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double normal();
  double normal(double mean, double sd);

  // Unbiased integer in [0, n) via Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n);

  // Fisher-Yates. Distinct indices drawn from [0, population), returned
  // sorted ascending.
  std::vector<Index> sample_indices(Index population, Index count);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace hubnet
