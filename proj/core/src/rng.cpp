#include "hubnet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hubnet {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

Seed Seed::child(std::uint64_t k) const {
  // (k+1) keeps child(0) distinct from the parent's own mixed value.
  return Seed{splitmix64_mix(value ^ ((k + 1) * kGolden))};
}

Rng::Rng(Seed seed) {
  std::uint64_t z = seed.value;
  for (auto& s : s_) {
    z += kGolden;
    s = splitmix64_mix(z);
  }
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

double Rng::normal(double mean, double sd) {
  return mean + sd * normal();
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) raise(ErrorKind::InvalidParameter, "Rng::below requires n > 0");
  // Lemire 2019: multiply-shift with rejection in the low word.
  std::uint64_t x = next_u64();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (lo < threshold) {
      x = next_u64();
      m = static_cast<__uint128_t>(x) * n;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

std::vector<Index> Rng::sample_indices(Index population, Index count) {
  if (count < 0 || population < 0 || count > population) {
    raise(ErrorKind::InvalidParameter,
          "sample_indices requires 0 <= count <= population");
  }
  std::vector<Index> pool(static_cast<std::size_t>(population));
  for (Index i = 0; i < population; ++i) pool[static_cast<std::size_t>(i)] = i;
  // Partial Fisher-Yates: after k swaps the first k slots are the sample.
  for (Index i = 0; i < count; ++i) {
    const auto j = static_cast<Index>(
        below(static_cast<std::uint64_t>(population - i)) +
        static_cast<std::uint64_t>(i));
    std::swap(pool[static_cast<std::size_t>(i)],
              pool[static_cast<std::size_t>(j)]);
  }
  std::vector<Index> out(pool.begin(), pool.begin() + count);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace hubnet
