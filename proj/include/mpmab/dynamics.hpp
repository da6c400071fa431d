#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "mpmab/policy.hpp"
#include "mpmab/rng.hpp"
#include "mpmab/simulator.hpp"

namespace mpmab {

struct StaticPopulation {
  std::size_t players = 1;
};

// Players arrive by a Poisson process and never leave; one player is
// present from the first step.
struct QuasiAsyncPopulation {
  double arrival_rate = 1e-4;  // per step
  std::size_t max_players = 1;
};

// M/M/K/K: Poisson arrivals, exponential stays, arrivals blocked when all K
// arms are taken. Starts empty.
struct MmkPopulation {
  double arrival_rate = 1e-4;
  double departure_rate = 1e-4;
};

using PopulationModel = std::variant<StaticPopulation, QuasiAsyncPopulation, MmkPopulation>;

void validate(const PopulationModel& model, std::size_t k_arms);
bool is_static(const PopulationModel& model);

struct PopulationEvent {
  enum class Kind { kArrival, kDeparture, kBlockedArrival };
  static constexpr std::uint64_t kNoPlayer = std::numeric_limits<std::uint64_t>::max();

  std::uint64_t step = 0;  // applied before step `step` runs (0-based)
  Kind kind = Kind::kArrival;
  std::uint64_t player = kNoPlayer;

  friend bool operator==(const PopulationEvent&, const PopulationEvent&) = default;
};

/// Samples arrivals and departures over `horizon` steps.
///
/// Continuous rates are thinned per step: an arrival happens with
/// probability 1 - exp(-lambda) and each active player leaves with
/// probability 1 - exp(-nu). Within a step, departures come first (one
/// uniform per active player in id order), then one uniform for the
/// arrival. Player ids count arrivals from 0. Events are ordered by step.
std::vector<PopulationEvent> sample_population(const PopulationModel& model, std::uint64_t horizon,
                                               std::size_t k_arms, Rng& rng);

struct RatioTrace {
  double achieved_total = 0.0;  // sum over steps of expected reward
  double oracle_total = 0.0;    // sum over steps of oracle_rate(mu, M(t))
  std::uint64_t horizon = 0;
  std::vector<std::uint64_t> checkpoints;
  std::vector<std::size_t> active_at;  // M(t) at each checkpoint
  std::vector<double> cumulative_regret;  // oracle minus achieved, at each checkpoint
  double mean_active = 0.0;
  std::uint64_t arrivals = 0;
  std::uint64_t departures = 0;
  std::uint64_t blocked = 0;
  // Final pull counts of every player, indexed by player id.
  std::vector<std::vector<std::uint64_t>> player_pull_counts;

  double achieved_rate() const { return horizon ? achieved_total / static_cast<double>(horizon) : 0.0; }
  double oracle_rate() const { return horizon ? oracle_total / static_cast<double>(horizon) : 0.0; }
  // 1 when the oracle earns nothing (no players ever present).
  double ratio() const { return oracle_total > 0.0 ? achieved_total / oracle_total : 1.0; }
};

// Creates the policy of a newly arrived player.
using PolicyFactory =
    std::function<std::unique_ptr<Policy>(std::uint64_t player_id, std::size_t active_players)>;

/// Runs the synchronous game under a changing population.
///
/// Events apply at step boundaries. Every player runs on its own clock from
/// its arrival. Steps with no player contribute zero to both totals.
RatioTrace run_dynamic(BernoulliEnvironment& env, const PolicyFactory& factory,
                       std::span<const PopulationEvent> events, std::uint64_t horizon,
                       std::span<const std::uint64_t> checkpoints);

}  // namespace mpmab
