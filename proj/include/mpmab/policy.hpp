#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpmab/kl.hpp"
#include "mpmab/rng.hpp"

namespace mpmab {

// What a single player knows: its own pull counts and reward sums, its
// internal clock, and a private random stream. Arms are 0-based.
struct PlayerState {
  PlayerState(std::size_t k_arms, std::uint64_t seed);

  std::vector<std::uint64_t> pull_counts;
  std::vector<double> reward_sums;
  std::uint64_t local_clock = 0;
  Rng rng;

  std::size_t arms() const { return pull_counts.size(); }
  double empirical_mean(std::size_t arm) const;

  // Current step on the player's own clock, starting at 1.
  double time() const { return static_cast<double>(local_clock + 1); }

  void record(std::size_t arm, int reward);
};

enum class TieBreak { kLowestIndex, kRandom };

// Index of the first maximal element.
std::size_t argmax_lowest(std::span<const double> values);

std::vector<double> klucb_indices(const PlayerState& state, double c, const KlSolverConfig& cfg);

// UCB1 indices; unvisited arms get +infinity.
std::vector<double> ucb1_indices(const PlayerState& state);

// Picks among the maximal entries according to `tie`; only kRandom touches rng.
std::size_t pick_max(std::span<const double> values, TieBreak tie, Rng& rng);

class Policy {
 public:
  Policy(std::size_t k_arms, std::uint64_t seed) : state_(k_arms, seed) {}
  virtual ~Policy() = default;

  Policy(const Policy&) = default;
  Policy& operator=(const Policy&) = default;

  virtual std::size_t select() = 0;

  // `collided` is only supplied when the environment grants sensing.
  // Policies without sensing ignore it.
  virtual void update(std::size_t arm, int reward, std::optional<bool> collided);

  virtual std::string name() const = 0;
  virtual bool requires_sensing() const { return false; }

  const PlayerState& state() const { return state_; }
  PlayerState& mutable_state() { return state_; }

 protected:
  PlayerState state_;
};

class SelfishKlUcb : public Policy {
 public:
  SelfishKlUcb(std::size_t k_arms, std::uint64_t seed, double c = 0.0,
               TieBreak tie = TieBreak::kLowestIndex, KlSolverConfig solver = {});

  std::size_t select() override;
  std::string name() const override { return "selfish_klucb"; }

 private:
  double c_;
  TieBreak tie_;
  KlSolverConfig solver_;
};

// Selfish KL-UCB with a Gaussian perturbation of scale 1/t added to every
// index. Draws exactly K standard normals per step, in arm order.
class RandomizedSelfishKlUcb : public Policy {
 public:
  RandomizedSelfishKlUcb(std::size_t k_arms, std::uint64_t seed, double c = 0.0,
                         KlSolverConfig solver = {});

  std::size_t select() override;
  std::string name() const override { return "randomized_selfish_klucb"; }

  // Perturbations drawn by the most recent select(), before scaling by 1/t.
  const std::vector<double>& last_perturbation() const { return noise_; }

 private:
  double c_;
  KlSolverConfig solver_;
  std::vector<double> noise_;
};

class SelfishUcb1 : public Policy {
 public:
  SelfishUcb1(std::size_t k_arms, std::uint64_t seed, TieBreak tie = TieBreak::kLowestIndex);

  std::size_t select() override;
  std::string name() const override { return "selfish_ucb1"; }

 private:
  TieBreak tie_;
};

class FixedArm : public Policy {
 public:
  FixedArm(std::size_t k_arms, std::size_t arm);

  std::size_t select() override { return arm_; }
  std::string name() const override { return "fixed_arm"; }

 private:
  std::size_t arm_;
};

struct MusicalChairsConfig {
  std::uint64_t exploration_steps = 0;  // T0
  // When set, used in place of the collision-frequency estimate of M.
  std::optional<std::size_t> known_players;
};

// Musical Chairs with collision sensing. Explores uniformly for T0 steps,
// ranks arms by collision-free empirical mean, then hops uniformly among the
// estimated top M arms until a collision-free step and stays there.
class MusicalChairs : public Policy {
 public:
  MusicalChairs(std::size_t k_arms, std::uint64_t seed, MusicalChairsConfig cfg, bool sensing_enabled);

  std::size_t select() override;
  void update(std::size_t arm, int reward, std::optional<bool> collided) override;
  std::string name() const override { return "musical_chairs"; }
  bool requires_sensing() const override { return true; }

  std::optional<std::size_t> settled_arm() const { return settled_; }
  std::size_t estimated_players() const { return m_hat_; }

  // round(log((T0 - C) / T0) / log(1 - 1/K)) + 1, clamped to [1, K].
  static std::size_t estimate_players(std::uint64_t exploration_steps, std::uint64_t collisions,
                                      std::size_t k_arms);

 private:
  void finish_exploration();

  MusicalChairsConfig cfg_;
  std::vector<std::uint64_t> clean_counts_;
  std::vector<double> clean_sums_;
  std::uint64_t collisions_ = 0;
  std::size_t m_hat_ = 0;
  std::vector<std::size_t> top_arms_;
  std::optional<std::size_t> settled_;
};

// Default Musical Chairs exploration length ceil(16 K log T).
std::uint64_t default_exploration_steps(std::size_t k_arms, std::uint64_t horizon);

enum class PolicyKind { kSelfishKlUcb, kRandomizedSelfishKlUcb, kSelfishUcb1, kFixedArm, kMusicalChairs };

std::string_view policy_kind_name(PolicyKind kind);
std::optional<PolicyKind> parse_policy_kind(std::string_view name);

// Declarative description of a policy, as read from an experiment config.
struct PolicySpec {
  PolicyKind kind = PolicyKind::kRandomizedSelfishKlUcb;
  double c = 0.0;
  TieBreak tie = TieBreak::kLowestIndex;
  std::size_t arm = 0;
  std::optional<std::uint64_t> exploration_steps;
  bool known_players = false;
  KlSolverConfig solver;
};

// Facts available when a player is created.
struct PolicyContext {
  std::size_t k_arms = 0;
  std::uint64_t horizon = 0;
  bool sensing_enabled = false;
  std::size_t active_players = 0;  // including the new player
  std::uint64_t seed = 0;
};

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const PolicyContext& ctx);

}  // namespace mpmab
