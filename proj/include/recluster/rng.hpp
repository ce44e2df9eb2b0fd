#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace recluster {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace detail

/// xoshiro256** stream seeded from a (seed, keys...) tuple through splitmix64.
/// Substreams keyed by distinct tuples are independent for practical purposes,
/// which keeps resampling loops reproducible for any worker count.
class RngStream {
 public:
  RngStream() : RngStream(0, {}) {}

  RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = seed;
    detail::splitmix64(h);
    for (std::uint64_t k : keys) {
      h ^= k + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      detail::splitmix64(h);
    }
    for (auto& word : state_) word = detail::splitmix64(h);
  }

  RngStream substream(std::uint64_t key) const {
    RngStream child;
    std::uint64_t h = state_[0] ^ detail::rotl(state_[2], 17) ^ key;
    for (auto& word : child.state_) word = detail::splitmix64(h);
    child.cached_normal_valid_ = false;
    return child;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  /// Uniform on (0, 1); never returns exactly 0 so log() below is safe.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller, caching the paired draw.
  double normal() {
    if (cached_normal_valid_) {
      cached_normal_valid_ = false;
      return cached_normal_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    cached_normal_ = r * std::sin(theta);
    cached_normal_valid_ = true;
    return r * std::cos(theta);
  }

  /// Unbiased integer in [0, bound) by rejection.
  std::uint64_t bounded(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  double rademacher() { return (next_u64() & 1ull) ? 1.0 : -1.0; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Uniformly random permutation of {0, ..., n-1}.
  std::vector<std::int32_t> permutation(std::int32_t n) {
    std::vector<std::int32_t> p(static_cast<std::size_t>(n));
    for (std::int32_t i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    shuffle(p);
    return p;
  }

 private:
  std::uint64_t state_[4] = {1, 2, 3, 4};
  double cached_normal_ = 0.0;
  bool cached_normal_valid_ = false;
};

}  // namespace recluster
