#include "mpmab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "mpmab/errors.hpp"

namespace mpmab {

BernoulliEnvironment::BernoulliEnvironment(std::vector<double> mu, std::uint64_t seed,
                                           bool sensing_enabled)
    : mu_(std::move(mu)), rng_(seed), sensing_(sensing_enabled) {
  if (mu_.empty()) throw ConfigError("environment needs at least one arm", "environment");
  for (double m : mu_) {
    if (!(m >= 0.0 && m <= 1.0)) throw ConfigError("arm means must lie in [0, 1]", "environment.mu");
  }
}

void BernoulliEnvironment::step(std::span<const std::size_t> choices, StepOutcome& out) {
  const std::size_t k = arms();
  out.arm_values.resize(k);
  for (std::size_t a = 0; a < k; ++a) out.arm_values[a] = rng_.bernoulli(mu_[a]) ? 1 : 0;

  out.occupancy.assign(k, 0);
  for (std::size_t arm : choices) {
    if (arm >= k) throw std::domain_error("chosen arm index out of range");
    ++out.occupancy[arm];
  }
  out.rewards.resize(choices.size());
  out.collided.resize(choices.size());
  for (std::size_t m = 0; m < choices.size(); ++m) {
    const std::size_t arm = choices[m];
    const bool eta = out.occupancy[arm] >= 2;
    out.collided[m] = eta;
    out.rewards[m] = eta ? 0 : out.arm_values[arm];
  }
}

StepOutcome BernoulliEnvironment::step(std::span<const std::size_t> choices) {
  StepOutcome out;
  step(choices, out);
  return out;
}

double oracle_rate(std::span<const double> mu, std::size_t m_active) {
  if (m_active > mu.size()) throw std::domain_error("more active players than arms");
  std::vector<double> sorted(mu.begin(), mu.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double total = 0.0;
  for (std::size_t i = 0; i < m_active; ++i) total += sorted[i];
  return total;
}

std::vector<double> oracle_rate_table(std::span<const double> mu) {
  std::vector<double> table(mu.size() + 1);
  for (std::size_t m = 0; m <= mu.size(); ++m) table[m] = oracle_rate(mu, m);
  return table;
}

double expected_rate(std::span<const double> mu, std::span<const std::size_t> choices,
                     std::span<const std::size_t> occupancy) {
  double total = 0.0;
  for (std::size_t arm : choices) {
    if (occupancy[arm] == 1) total += mu[arm];
  }
  return total;
}

std::vector<std::uint64_t> log_checkpoints(std::uint64_t horizon, std::size_t count) {
  std::vector<std::uint64_t> grid;
  if (horizon == 0 || count == 0) return grid;
  const double top = std::log(static_cast<double>(horizon));
  for (std::size_t i = 0; i < count; ++i) {
    const double frac = count == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    auto t = static_cast<std::uint64_t>(std::llround(std::exp(frac * top)));
    t = std::clamp<std::uint64_t>(t, 1, horizon);
    if (grid.empty() || t > grid.back()) grid.push_back(t);
  }
  if (grid.back() != horizon) grid.push_back(horizon);
  return grid;
}

std::vector<std::uint64_t> linear_checkpoints(std::uint64_t horizon, std::size_t count) {
  std::vector<std::uint64_t> grid;
  if (horizon == 0 || count == 0) return grid;
  for (std::size_t i = 1; i <= count; ++i) {
    const auto t = static_cast<std::uint64_t>(
        std::llround(static_cast<double>(horizon) * static_cast<double>(i) / static_cast<double>(count)));
    if (t >= 1 && (grid.empty() || t > grid.back())) grid.push_back(t);
  }
  if (grid.back() != horizon) grid.push_back(horizon);
  return grid;
}

RunTrace run_static(BernoulliEnvironment& env, std::span<const std::unique_ptr<Policy>> policies,
                    std::uint64_t horizon, std::span<const std::uint64_t> checkpoints) {
  const std::size_t k = env.arms();
  const std::size_t m = policies.size();
  if (m > k) throw ConfigError("static runs need M <= K", "population.players");
  for (const auto& p : policies) {
    if (p->state().arms() != k) throw ConfigError("policy arm count differs from environment", "environment");
    if (p->requires_sensing() && !env.sensing_enabled()) {
      throw ConfigError(p->name() + " needs an environment with collision sensing", "environment.sensing");
    }
  }
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end()) ||
      (!checkpoints.empty() && (checkpoints.front() < 1 || checkpoints.back() > horizon))) {
    throw ConfigError("checkpoints must be sorted within [1, horizon]", "checkpoints");
  }

  const double oracle = oracle_rate(env.mu(), m);
  RunTrace trace;
  trace.checkpoints.assign(checkpoints.begin(), checkpoints.end());
  trace.cumulative_regret.reserve(checkpoints.size());
  trace.pull_counts_at.reserve(checkpoints.size());

  std::vector<std::size_t> choices(m);
  StepOutcome out;
  double regret = 0.0;
  std::size_t next_cp = 0;
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    for (std::size_t i = 0; i < m; ++i) choices[i] = policies[i]->select();
    env.step(choices, out);
    const double achieved = expected_rate(env.mu(), choices, out.occupancy);
    trace.expected_reward += achieved;
    regret += std::max(oracle - achieved, 0.0);
    for (std::size_t n : out.occupancy) trace.collisions += (n >= 2);
    for (std::size_t i = 0; i < m; ++i) {
      std::optional<bool> flag;
      if (env.sensing_enabled()) flag = out.collided[i];
      policies[i]->update(choices[i], out.rewards[i], flag);
    }
    while (next_cp < checkpoints.size() && checkpoints[next_cp] == t) {
      trace.cumulative_regret.push_back(regret);
      auto& counts = trace.pull_counts_at.emplace_back();
      for (const auto& p : policies) counts.push_back(p->state().pull_counts);
      ++next_cp;
    }
  }
  return trace;
}

}  // namespace mpmab
