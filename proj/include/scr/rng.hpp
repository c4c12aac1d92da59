#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace scr {

// Seeded random stream with platform-independent output.
//
// std::mt19937_64 has a fully specified output sequence, but the standard
// distributions do not, so every draw here is derived from raw 64-bit words
// with fixed integer arithmetic (uniforms, bounded integers) or a fixed
// transform (Box-Muller for normals).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform();

  // Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  // Independent child stream; same (seed, stream) always yields the same child.
  Rng fork(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace scr
