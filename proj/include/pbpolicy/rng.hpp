#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace pbpolicy {

// SplitMix64 finalizer; used to turn (seed, counters...) tuples into
// well-separated stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256** (Blackman and Vigna). A fresh stream is opened per particle
// and step, so construction has to be cheap; mt19937_64 seeding dominated
// sampler run time.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) noexcept {
    std::uint64_t z = seed;
    for (auto& w : s_) {
      z += 0x9e3779b97f4a7c15ULL;
      w = mix64(z);
    }
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t out = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return out;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

using Stream = Xoshiro256;

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) noexcept {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t c : counters) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

// Independent stream keyed by a seed and an ordered list of counters, e.g.
// (seed, particle, step). Results never depend on which thread draws them.
inline Stream make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) {
  return Stream(derive_seed(seed, counters));
}

// Stream-purpose tags so different consumers of one (seed, index) pair
// never share draws.
enum class StreamTag : std::uint64_t {
  prior_draw = 1,
  mh_proposal = 2,
  resample = 3,
  dgp_unit = 4,
  fold_split = 5,
  assignment = 6,
  replication = 7,
};

inline Stream make_stream(std::uint64_t seed, StreamTag tag, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0) {
  return make_stream(seed, {static_cast<std::uint64_t>(tag), a, b, c});
}

// U(0,1) with 53 random bits; identical across standard libraries, unlike
// std::uniform_real_distribution.
inline double uniform01(Stream& s) { return static_cast<double>(s() >> 11) * 0x1.0p-53; }

}  // namespace pbpolicy
