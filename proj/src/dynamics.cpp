#include "mpmab/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "mpmab/errors.hpp"

namespace mpmab {

namespace {

void check_rate(double rate, const char* key) {
  if (!(rate > 0.0 && rate < 1.0)) throw ConfigError("rate must lie in (0, 1)", key);
}

// Per-step probability of at least one event of a Poisson process.
double step_probability(double rate) { return -std::expm1(-rate); }

}  // namespace

void validate(const PopulationModel& model, std::size_t k_arms) {
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, StaticPopulation>) {
          if (m.players > k_arms) throw ConfigError("static runs need M <= K", "population.players");
        } else if constexpr (std::is_same_v<T, QuasiAsyncPopulation>) {
          check_rate(m.arrival_rate, "population.lambda");
          if (m.max_players < 1 || m.max_players > k_arms) {
            throw ConfigError("max_players must lie in [1, K]", "population.max_players");
          }
        } else {
          check_rate(m.arrival_rate, "population.lambda");
          check_rate(m.departure_rate, "population.nu");
        }
      },
      model);
}

bool is_static(const PopulationModel& model) {
  return std::holds_alternative<StaticPopulation>(model);
}

std::vector<PopulationEvent> sample_population(const PopulationModel& model, std::uint64_t horizon,
                                               std::size_t k_arms, Rng& rng) {
  validate(model, k_arms);
  using Kind = PopulationEvent::Kind;
  std::vector<PopulationEvent> events;
  std::uint64_t next_id = 0;

  if (const auto* s = std::get_if<StaticPopulation>(&model)) {
    for (std::size_t i = 0; i < s->players; ++i) events.push_back({0, Kind::kArrival, next_id++});
    return events;
  }

  if (const auto* q = std::get_if<QuasiAsyncPopulation>(&model)) {
    if (horizon == 0) return events;
    const double p = step_probability(q->arrival_rate);
    events.push_back({0, Kind::kArrival, next_id++});
    for (std::uint64_t t = 1; t < horizon; ++t) {
      const bool arrives = rng.uniform() < p;
      if (arrives && next_id < q->max_players) events.push_back({t, Kind::kArrival, next_id++});
    }
    return events;
  }

  const auto& mmk = std::get<MmkPopulation>(model);
  const double p_arrive = step_probability(mmk.arrival_rate);
  const double p_leave = step_probability(mmk.departure_rate);
  std::vector<std::uint64_t> active;
  std::vector<std::uint64_t> staying;
  for (std::uint64_t t = 0; t < horizon; ++t) {
    staying.clear();
    for (std::uint64_t id : active) {
      if (rng.uniform() < p_leave) {
        events.push_back({t, Kind::kDeparture, id});
      } else {
        staying.push_back(id);
      }
    }
    active.swap(staying);
    if (rng.uniform() < p_arrive) {
      if (active.size() < k_arms) {
        active.push_back(next_id);
        events.push_back({t, Kind::kArrival, next_id++});
      } else {
        events.push_back({t, Kind::kBlockedArrival, PopulationEvent::kNoPlayer});
      }
    }
  }
  return events;
}

RatioTrace run_dynamic(BernoulliEnvironment& env, const PolicyFactory& factory,
                       std::span<const PopulationEvent> events, std::uint64_t horizon,
                       std::span<const std::uint64_t> checkpoints) {
  using Kind = PopulationEvent::Kind;
  const std::size_t k = env.arms();
  const auto oracle = oracle_rate_table(env.mu());

  RatioTrace trace;
  trace.horizon = horizon;
  trace.checkpoints.assign(checkpoints.begin(), checkpoints.end());

  struct Player {
    std::uint64_t id;
    std::unique_ptr<Policy> policy;
  };
  std::vector<Player> players;  // kept in arrival order
  auto retire = [&](const Player& p) {
    if (trace.player_pull_counts.size() <= p.id) trace.player_pull_counts.resize(p.id + 1);
    trace.player_pull_counts[p.id] = p.policy->state().pull_counts;
  };

  std::vector<std::size_t> choices;
  StepOutcome out;
  std::size_t next_event = 0;
  std::size_t next_cp = 0;
  double active_sum = 0.0;
  double regret = 0.0;
  for (std::uint64_t t = 0; t < horizon; ++t) {
    for (; next_event < events.size() && events[next_event].step <= t; ++next_event) {
      const auto& ev = events[next_event];
      if (ev.kind == Kind::kDeparture) {
        auto it = std::find_if(players.begin(), players.end(),
                               [&](const Player& p) { return p.id == ev.player; });
        if (it == players.end()) throw std::logic_error("departure of an inactive player");
        retire(*it);
        players.erase(it);
        ++trace.departures;
      } else if (ev.kind == Kind::kArrival) {
        if (players.size() >= k) throw std::logic_error("arrival beyond capacity");
        auto policy = factory(ev.player, players.size() + 1);
        if (policy->state().arms() != k) throw ConfigError("policy arm count differs from environment", "environment");
        if (policy->requires_sensing() && !env.sensing_enabled()) {
          throw ConfigError(policy->name() + " needs an environment with collision sensing",
                            "environment.sensing");
        }
        players.push_back({ev.player, std::move(policy)});
        ++trace.arrivals;
      } else {
        ++trace.blocked;
      }
    }

    const std::size_t m = players.size();
    choices.resize(m);
    for (std::size_t i = 0; i < m; ++i) choices[i] = players[i].policy->select();
    env.step(choices, out);
    const double achieved = expected_rate(env.mu(), choices, out.occupancy);
    trace.achieved_total += achieved;
    trace.oracle_total += oracle[m];
    regret += std::max(oracle[m] - achieved, 0.0);
    active_sum += static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
      std::optional<bool> flag;
      if (env.sensing_enabled()) flag = out.collided[i];
      players[i].policy->update(choices[i], out.rewards[i], flag);
    }
    while (next_cp < checkpoints.size() && checkpoints[next_cp] == t + 1) {
      trace.active_at.push_back(m);
      trace.cumulative_regret.push_back(regret);
      ++next_cp;
    }
  }
  for (const auto& p : players) retire(p);
  trace.mean_active = horizon ? active_sum / static_cast<double>(horizon) : 0.0;
  return trace;
}

}  // namespace mpmab
