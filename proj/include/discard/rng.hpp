#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace discard {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

/**
 * Deterministic, splittable random stream.
 *
 * A stream is identified by a master seed and a derivation path. The
 * generator state is a pure function of (seed, path): the path is folded
 * through splitmix64 into a 64-bit key which seeds a xoshiro256** engine.
 * Children never depend on how many values the parent has drawn, so
 * replicate r of a parallel job sees the same stream regardless of
 * scheduling.
 *
 * Normal deviates use the Box-Muller transform (cosine branch only, one
 * draw per call, no cached second value).
 */
class Rng {
 public:
  explicit Rng(std::uint64_t master_seed) : seed_(master_seed) { reseed(); }

  /// Child stream at path + [index]; does not advance this stream.
  Rng derive(std::uint64_t index) const {
    Rng child = *this;
    child.path_.push_back(index);
    child.reseed();
    return child;
  }

  std::uint64_t master_seed() const noexcept { return seed_; }
  std::span<const std::uint64_t> path() const noexcept { return path_; }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = detail::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Unbiased integer in [0, n) (Lemire's multiply-and-reject).
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be >= 1");
    const std::uint64_t range = n;
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * range;
    auto low = static_cast<std::uint64_t>(m);
    if (low < range) {
      const std::uint64_t threshold = (0 - range) % range;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * range;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::size_t>(m >> 64);
  }

  double normal(double mu, double sd) {
    if (!(sd >= 0.0)) throw std::invalid_argument("normal: sd must be >= 0");
    if (sd == 0.0) return mu;
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mu + sd * z;
  }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  void reseed() noexcept {
    std::uint64_t key = detail::splitmix64(seed_ ^ 0x6A09E667F3BCC908ULL);
    for (std::uint64_t index : path_) {
      key = detail::splitmix64(detail::rotl(key, 23) ^ detail::splitmix64(index + 0x3C6EF372FE94F82BULL));
    }
    for (auto& word : s_) {
      key += 0x9E3779B97F4A7C15ULL;
      word = detail::splitmix64(key);
    }
  }

  std::uint64_t seed_;
  std::vector<std::uint64_t> path_;
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace discard
