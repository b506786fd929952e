#pragma once

// Random number generation with reproducible substreams.
//
// A run is driven by a single 64-bit master seed. Every independent unit of
// work (one Monte Carlo sample, one block of a population-dynamics step, ...)
// draws from its own generator, keyed by a tuple of counters
// (master, stream, index). The key is hashed through splitmix64 to seed a
// xoshiro256++ state, so the values a unit sees depend only on its key and
// never on which thread ran it or in what order.
//
// The key-to-state mapping below is part of the output contract: changing it
// changes every reported number.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace hmgw::rng {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  std::uint64_t s = x;
  return splitmix64(s);
}

/// xoshiro256++ (Blackman & Vigna). Satisfies UniformRandomBitGenerator.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed = 0x853C49E6748FEA9BULL) noexcept {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
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

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> s_{};
};

using Engine = Xoshiro256pp;

/// Generator for the unit of work identified by (master, stream, index).
inline Engine substream(std::uint64_t master, std::uint64_t stream,
                        std::uint64_t index = 0) noexcept {
  std::uint64_t h = mix64(master ^ 0x6A09E667F3BCC909ULL);
  h = mix64(h ^ (stream * 0xD1B54A32D192ED03ULL));
  h = mix64(h ^ (index * 0x8CB92BA72F3D8DD7ULL + 0x3C6EF372FE94F82BULL));
  return Engine(h);
}

/// Uniform on [0, 1) with 53 random bits.
template <class Rng>
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform on (0, 1).
template <class Rng>
inline double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 12) + 0.5) * 0x1.0p-52;
}

template <class Rng>
inline bool bernoulli(Rng& rng, double p) {
  return uniform01(rng) < p;
}

template <class Rng>
inline double exponential(Rng& rng, double rate = 1.0) {
  return -std::log(uniform_open(rng)) / rate;
}

/// Uniform integer on {0, ..., n-1} (Lemire's multiply-shift, unbiased).
template <class Rng>
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  std::uint64_t x = rng();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = rng();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace hmgw::rng
