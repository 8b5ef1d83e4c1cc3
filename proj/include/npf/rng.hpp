#ifndef NPF_RNG_HPP
#define NPF_RNG_HPP

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace npf {

/// SplitMix64 finalizer. Used to derive stream seeds from (seed, key...) tuples.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Purposes a stream can be keyed by. Values are part of the reproducibility
/// contract: changing them changes every output.
enum class StreamTag : std::uint64_t {
  param_prior = 1,
  state_prior = 2,
  step = 3,
  outer_resample = 4,
  data = 5,
  replicate = 6,
  chain = 7,
};

/// xoshiro256++ engine with a cached normal sampler. Satisfies
/// UniformRandomBitGenerator so it can drive <random> distributions.
///
/// Independent streams are obtained with `Rng::stream(seed, tag, a, b)`;
/// the derived seed depends only on the key tuple, never on which thread
/// asks for it.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) noexcept { reseed(seed); }

  static Rng stream(std::uint64_t seed, StreamTag tag, std::uint64_t a = 0,
                    std::uint64_t b = 0) noexcept {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ (b + 0x632be59bd9b4e019ULL));
    return Rng(h);
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

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  double normal() { return normal_(*this); }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  void reseed(std::uint64_t seed) noexcept {
    std::uint64_t x = seed;
    for (auto& word : s_) {
      x += 0x9e3779b97f4a7c15ULL;
      word = splitmix64(x);
    }
    normal_.reset();
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_{};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace npf

#endif
