#pragma once

#include <cstdint>
#include <random>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace mpmab {

// A private pseudorandom stream. The engine is fully specified by the
// standard and the distributions come from Boost.Random, so a seed yields
// the same draws on every platform and standard library.
class Rng {
 public:
  using Engine = std::mt19937_64;

  explicit Rng(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

  double uniform() { return boost::random::uniform_01<double>{}(engine_); }

  double normal() { return boost::random::normal_distribution<double>{}(engine_); }

  bool bernoulli(double p) { return boost::random::bernoulli_distribution<double>{p}(engine_); }

  // Uniform integer in [0, n).
  std::size_t below(std::size_t n) {
    return boost::random::uniform_int_distribution<std::size_t>{0, n - 1}(engine_);
  }

  std::uint64_t seed() const { return seed_; }

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  Engine engine_;
  std::uint64_t seed_;
};

// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stream roles within one replication. Player i uses role kPlayerBase + i.
enum class StreamRole : std::uint64_t { kEnvironment = 0, kPopulation = 1, kEnvGenerator = 2, kPlayerBase = 16 };

inline constexpr int kRoleBits = 24;

/// Seed for (replication, role) derived from a master seed.
///
/// The key (replication << 24 | role) is injective for replication < 2^40
/// and role < 2^24; mix64 is a bijection, so distinct keys never share a
/// seed under the same master.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication,
                                    std::uint64_t role) {
  const std::uint64_t key = (replication << kRoleBits) | (role & ((1ULL << kRoleBits) - 1));
  return mix64(mix64(master) ^ key);
}

constexpr std::uint64_t player_role(std::uint64_t player) {
  return static_cast<std::uint64_t>(StreamRole::kPlayerBase) + player;
}

}  // namespace mpmab
