#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "mpmab/policy.hpp"
#include "mpmab/rng.hpp"

namespace mpmab {

// Result of one synchronous step, indexed by player unless noted.
struct StepOutcome {
  std::vector<int> rewards;
  std::vector<bool> collided;             // eta of the chosen arm
  std::vector<std::size_t> occupancy;     // per arm
  std::vector<int> arm_values;            // X_k(t), per arm
};

class BernoulliEnvironment {
 public:
  BernoulliEnvironment(std::vector<double> mu, std::uint64_t seed, bool sensing_enabled = false);

  std::size_t arms() const { return mu_.size(); }
  const std::vector<double>& mu() const { return mu_; }
  bool sensing_enabled() const { return sensing_; }

  // Draws X_k(t) for every arm, in arm order, whether or not anyone plays.
  void step(std::span<const std::size_t> choices, StepOutcome& out);
  StepOutcome step(std::span<const std::size_t> choices);

 private:
  std::vector<double> mu_;
  Rng rng_;
  bool sensing_;
};

/// Sum of the m_active largest means.
double oracle_rate(std::span<const double> mu, std::size_t m_active);

// oracle_rate for every m in [0, K].
std::vector<double> oracle_rate_table(std::span<const double> mu);

// Expected reward of the given choices: sum of mu over arms chosen by exactly one player.
double expected_rate(std::span<const double> mu, std::span<const std::size_t> choices,
                     std::span<const std::size_t> occupancy);

struct RunTrace {
  std::vector<std::uint64_t> checkpoints;
  std::vector<double> cumulative_regret;
  // pull_counts_at[c][player][arm] at checkpoint c.
  std::vector<std::vector<std::vector<std::uint64_t>>> pull_counts_at;
  std::uint64_t collisions = 0;  // arm-steps with two or more players
  double expected_reward = 0.0;

  double total_regret() const { return cumulative_regret.empty() ? 0.0 : cumulative_regret.back(); }
};

// Log-spaced grid of at most `count` distinct steps in [1, horizon], always ending at horizon.
std::vector<std::uint64_t> log_checkpoints(std::uint64_t horizon, std::size_t count);
std::vector<std::uint64_t> linear_checkpoints(std::uint64_t horizon, std::size_t count);

/// Runs the static synchronous game for `horizon` steps.
///
/// All players select before any of them observes; per-step pseudo-regret
/// oracle_rate(mu, M) - expected_rate(...) is accumulated and recorded after
/// each checkpoint step. Throws ConfigError when M > K or when a policy
/// needs sensing the environment does not grant.
RunTrace run_static(BernoulliEnvironment& env, std::span<const std::unique_ptr<Policy>> policies,
                    std::uint64_t horizon, std::span<const std::uint64_t> checkpoints);

}  // namespace mpmab
