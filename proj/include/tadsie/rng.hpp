#pragma once

#include <array>
#include <cstdint>
#include <cstddef>

namespace tadsie {

// Seedable xoshiro256++ stream. Every stochastic operation takes one of
// these explicitly; there is no global RNG. Child streams are derived by
// hashing (seed, key), so a parent can hand out independent streams to
// parallel workers in any order without advancing its own state.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed) {
    // splitmix64 expansion of the seed into the xoshiro state
    std::uint64_t x = seed;
    for (auto& s : state_) s = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on the open interval (0,1); 53-bit resolution, never 0 or 1.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
  }

  // Standard normal draw via the inverse CDF (implemented in stats.cpp).
  double normal();

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Uniform index in [0, n) by Lemire multiply-shift.
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Independent child stream. Draws one value from the parent and mixes it
  // with the key, so successive derivations (even with equal keys) yield
  // distinct children while staying deterministic for a fixed call order.
  RngStream derive(std::uint64_t key) {
    std::uint64_t x =
        next_u64() ^ (0x9e3779b97f4a7c15ULL + key * 0xbf58476d1ce4e5b9ULL);
    return RngStream(splitmix64(x));
  }

  std::uint64_t seed() const { return seed_; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_;
};

}  // namespace tadsie
