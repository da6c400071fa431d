#include "mpmab/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mpmab/errors.hpp"

namespace mpmab {

PlayerState::PlayerState(std::size_t k_arms, std::uint64_t seed)
    : pull_counts(k_arms, 0), reward_sums(k_arms, 0.0), rng(seed) {
  if (k_arms == 0) throw std::invalid_argument("a player needs at least one arm");
}

double PlayerState::empirical_mean(std::size_t arm) const {
  return reward_sums[arm] / static_cast<double>(std::max<std::uint64_t>(pull_counts[arm], 1));
}

void PlayerState::record(std::size_t arm, int reward) {
  if (arm >= arms()) throw std::out_of_range("arm index out of range");
  if (reward != 0 && reward != 1) throw std::domain_error("reward must be 0 or 1");
  ++pull_counts[arm];
  reward_sums[arm] += reward;
  ++local_clock;
}

std::size_t argmax_lowest(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

std::size_t pick_max(std::span<const double> values, TieBreak tie, Rng& rng) {
  const std::size_t first = argmax_lowest(values);
  if (tie == TieBreak::kLowestIndex) return first;
  std::size_t ties = 0;
  for (double v : values) ties += (v == values[first]);
  if (ties == 1) return first;
  std::size_t pick = rng.below(ties);
  for (std::size_t k = first; k < values.size(); ++k) {
    if (values[k] == values[first] && pick-- == 0) return k;
  }
  return first;
}

std::vector<double> klucb_indices(const PlayerState& state, double c, const KlSolverConfig& cfg) {
  const double f_t = exploration_rate(state.time(), c);
  std::vector<double> b(state.arms());
  for (std::size_t k = 0; k < b.size(); ++k) {
    b[k] = klucb_index(state.empirical_mean(k), state.pull_counts[k], f_t, cfg);
  }
  return b;
}

std::vector<double> ucb1_indices(const PlayerState& state) {
  const double log_t = std::log(state.time());
  std::vector<double> b(state.arms());
  for (std::size_t k = 0; k < b.size(); ++k) {
    const auto n = state.pull_counts[k];
    b[k] = n == 0 ? kInfinity
                  : state.empirical_mean(k) + std::sqrt(2.0 * log_t / static_cast<double>(n));
  }
  return b;
}

void Policy::update(std::size_t arm, int reward, std::optional<bool> /*collided*/) {
  state_.record(arm, reward);
}

SelfishKlUcb::SelfishKlUcb(std::size_t k_arms, std::uint64_t seed, double c, TieBreak tie,
                           KlSolverConfig solver)
    : Policy(k_arms, seed), c_(c), tie_(tie), solver_(solver) {
  solver_.validate();
}

std::size_t SelfishKlUcb::select() {
  const auto b = klucb_indices(state_, c_, solver_);
  return pick_max(b, tie_, state_.rng);
}

RandomizedSelfishKlUcb::RandomizedSelfishKlUcb(std::size_t k_arms, std::uint64_t seed, double c,
                                               KlSolverConfig solver)
    : Policy(k_arms, seed), c_(c), solver_(solver), noise_(k_arms, 0.0) {
  solver_.validate();
}

std::size_t RandomizedSelfishKlUcb::select() {
  auto b = klucb_indices(state_, c_, solver_);
  const double t = state_.time();
  for (std::size_t k = 0; k < b.size(); ++k) {
    noise_[k] = state_.rng.normal();
    b[k] += noise_[k] / t;
  }
  return argmax_lowest(b);
}

SelfishUcb1::SelfishUcb1(std::size_t k_arms, std::uint64_t seed, TieBreak tie)
    : Policy(k_arms, seed), tie_(tie) {}

std::size_t SelfishUcb1::select() {
  const auto b = ucb1_indices(state_);
  return pick_max(b, tie_, state_.rng);
}

FixedArm::FixedArm(std::size_t k_arms, std::size_t arm) : Policy(k_arms, 0), arm_(arm) {
  if (arm >= k_arms) throw ConfigError("fixed arm index out of range", "arm");
}

std::uint64_t default_exploration_steps(std::size_t k_arms, std::uint64_t horizon) {
  const double t = std::max<double>(static_cast<double>(horizon), 2.0);
  return static_cast<std::uint64_t>(std::ceil(16.0 * static_cast<double>(k_arms) * std::log(t)));
}

MusicalChairs::MusicalChairs(std::size_t k_arms, std::uint64_t seed, MusicalChairsConfig cfg,
                             bool sensing_enabled)
    : Policy(k_arms, seed), cfg_(cfg), clean_counts_(k_arms, 0), clean_sums_(k_arms, 0.0) {
  if (!sensing_enabled) {
    throw ConfigError("musical chairs needs an environment with collision sensing", "sensing");
  }
  if (cfg_.known_players && (*cfg_.known_players == 0 || *cfg_.known_players > k_arms)) {
    throw ConfigError("known player count must lie in [1, K]", "known_players");
  }
}

std::size_t MusicalChairs::estimate_players(std::uint64_t exploration_steps,
                                            std::uint64_t collisions, std::size_t k_arms) {
  if (k_arms == 1) return 1;
  if (exploration_steps == 0) return k_arms;
  if (collisions >= exploration_steps) return k_arms;
  const double free_fraction =
      static_cast<double>(exploration_steps - collisions) / static_cast<double>(exploration_steps);
  const double others = std::log(free_fraction) / std::log(1.0 - 1.0 / static_cast<double>(k_arms));
  const double m = std::round(others) + 1.0;
  return static_cast<std::size_t>(std::clamp(m, 1.0, static_cast<double>(k_arms)));
}

void MusicalChairs::finish_exploration() {
  const std::size_t k = state_.arms();
  m_hat_ = cfg_.known_players.value_or(estimate_players(cfg_.exploration_steps, collisions_, k));
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  auto mean = [&](std::size_t a) {
    return clean_sums_[a] / static_cast<double>(std::max<std::uint64_t>(clean_counts_[a], 1));
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return mean(a) > mean(b); });
  top_arms_.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m_hat_));
}

std::size_t MusicalChairs::select() {
  if (settled_) return *settled_;
  if (state_.local_clock < cfg_.exploration_steps) return state_.rng.below(state_.arms());
  if (top_arms_.empty()) finish_exploration();
  return top_arms_[state_.rng.below(top_arms_.size())];
}

void MusicalChairs::update(std::size_t arm, int reward, std::optional<bool> collided) {
  if (!collided) throw std::logic_error("musical chairs update needs the collision flag");
  const bool exploring = state_.local_clock < cfg_.exploration_steps;
  state_.record(arm, reward);
  if (exploring) {
    if (*collided) {
      ++collisions_;
    } else {
      ++clean_counts_[arm];
      clean_sums_[arm] += reward;
    }
  } else if (!settled_ && !*collided) {
    settled_ = arm;
  }
}

std::string_view policy_kind_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kSelfishKlUcb: return "selfish_klucb";
    case PolicyKind::kRandomizedSelfishKlUcb: return "randomized_selfish_klucb";
    case PolicyKind::kSelfishUcb1: return "selfish_ucb1";
    case PolicyKind::kFixedArm: return "fixed_arm";
    case PolicyKind::kMusicalChairs: return "musical_chairs";
  }
  return "unknown";
}

std::optional<PolicyKind> parse_policy_kind(std::string_view name) {
  for (auto kind : {PolicyKind::kSelfishKlUcb, PolicyKind::kRandomizedSelfishKlUcb,
                    PolicyKind::kSelfishUcb1, PolicyKind::kFixedArm, PolicyKind::kMusicalChairs}) {
    if (policy_kind_name(kind) == name) return kind;
  }
  return std::nullopt;
}

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const PolicyContext& ctx) {
  switch (spec.kind) {
    case PolicyKind::kSelfishKlUcb:
      return std::make_unique<SelfishKlUcb>(ctx.k_arms, ctx.seed, spec.c, spec.tie, spec.solver);
    case PolicyKind::kRandomizedSelfishKlUcb:
      return std::make_unique<RandomizedSelfishKlUcb>(ctx.k_arms, ctx.seed, spec.c, spec.solver);
    case PolicyKind::kSelfishUcb1:
      return std::make_unique<SelfishUcb1>(ctx.k_arms, ctx.seed, spec.tie);
    case PolicyKind::kFixedArm:
      return std::make_unique<FixedArm>(ctx.k_arms, spec.arm);
    case PolicyKind::kMusicalChairs: {
      MusicalChairsConfig mc;
      mc.exploration_steps =
          spec.exploration_steps.value_or(default_exploration_steps(ctx.k_arms, ctx.horizon));
      if (spec.known_players) mc.known_players = std::max<std::size_t>(ctx.active_players, 1);
      return std::make_unique<MusicalChairs>(ctx.k_arms, ctx.seed, mc, ctx.sensing_enabled);
    }
  }
  throw ConfigError("unknown policy kind", "policy.kind");
}

}  // namespace mpmab
