#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>

#include "mpmab/dynamics.hpp"
#include "mpmab/errors.hpp"

using namespace mpmab;
using Kind = PopulationEvent::Kind;

namespace {

// M(t) per step reconstructed from an event list.
std::vector<std::size_t> active_series(const std::vector<PopulationEvent>& events, std::uint64_t horizon) {
  std::vector<std::size_t> m(horizon);
  std::size_t active = 0, e = 0;
  for (std::uint64_t t = 0; t < horizon; ++t) {
    for (; e < events.size() && events[e].step == t; ++e) {
      if (events[e].kind == Kind::kArrival) ++active;
      if (events[e].kind == Kind::kDeparture) --active;
    }
    m[t] = active;
  }
  return m;
}

// Continuous-time M/M/K/K queue by direct event simulation, starting empty.
double gillespie_mean_active(double lambda, double nu, std::size_t k, double horizon, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double t = 0, area = 0;
  std::size_t m = 0;
  while (true) {
    const double total = lambda + nu * static_cast<double>(m);
    const double dt = expo(gen) / total;
    if (t + dt >= horizon) {
      area += static_cast<double>(m) * (horizon - t);
      break;
    }
    area += static_cast<double>(m) * dt;
    t += dt;
    if (u(gen) * total < lambda) {
      if (m < k) ++m;
    } else {
      --m;
    }
  }
  return area / horizon;
}

PolicyFactory fixed_factory(std::size_t k, std::function<std::size_t(std::uint64_t)> arm_of) {
  return [k, arm_of](std::uint64_t id, std::size_t) { return std::make_unique<FixedArm>(k, arm_of(id)); };
}

}  // namespace

TEST_CASE("static population emits M arrivals at step 0") {
  Rng rng(1);
  const auto ev = sample_population(StaticPopulation{3}, 1000, 5, rng);
  REQUIRE(ev.size() == 3);
  for (std::uint64_t i = 0; i < 3; ++i) {
    CHECK(ev[i] == PopulationEvent{0, Kind::kArrival, i});
  }
}

TEST_CASE("quasi-async arrivals") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto ev = sample_population(QuasiAsyncPopulation{1e-4, 5}, 20000, 5, rng);
    REQUIRE(!ev.empty());
    CHECK(ev.front().step == 0);
    CHECK(ev.size() <= 5);
    for (std::size_t i = 0; i < ev.size(); ++i) {
      CHECK(ev[i].kind == Kind::kArrival);
      CHECK(ev[i].player == i);
      if (i) CHECK(ev[i].step > ev[i - 1].step);
    }
    const auto m = active_series(ev, 20000);
    CHECK(std::is_sorted(m.begin(), m.end()));
  }
}

TEST_CASE("population models are validated") {
  Rng rng(1);
  CHECK_THROWS_AS(sample_population(StaticPopulation{6}, 10, 5, rng), ConfigError);
  CHECK_THROWS_AS(sample_population(QuasiAsyncPopulation{0.0, 2}, 10, 5, rng), ConfigError);
  CHECK_THROWS_AS(sample_population(QuasiAsyncPopulation{1e-3, 6}, 10, 5, rng), ConfigError);
  CHECK_THROWS_AS(sample_population(MmkPopulation{1.0, 1e-3}, 10, 5, rng), ConfigError);
  CHECK_THROWS_AS(sample_population(MmkPopulation{1e-3, -1.0}, 10, 5, rng), ConfigError);
}

TEST_CASE("mmk blocking keeps M(t) <= K and departures name active players") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const std::size_t k = 3;
    const auto ev = sample_population(MmkPopulation{0.05, 0.01}, 50000, k, rng);
    std::vector<bool> active;
    std::size_t m = 0, blocked = 0;
    for (const auto& e : ev) {
      if (e.kind == Kind::kArrival) {
        REQUIRE(e.player == active.size());
        active.push_back(true);
        ++m;
      } else if (e.kind == Kind::kDeparture) {
        REQUIRE(e.player < active.size());
        REQUIRE(active[e.player]);
        active[e.player] = false;
        --m;
      } else {
        REQUIRE(m == k);
        ++blocked;
      }
      REQUIRE(m <= k);
    }
    CHECK(blocked > 0);
  }
}

TEST_CASE("mmk time-averaged occupancy matches a continuous-time queue") {
  const double lambda = 1e-3, nu = 1e-4;
  const std::size_t k = 10;
  const std::uint64_t horizon = 1000000;
  double sampled = 0, oracle = 0;
  const int seeds = 50;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(derive_seed(123, s, static_cast<std::uint64_t>(StreamRole::kPopulation)));
    const auto m = active_series(sample_population(MmkPopulation{lambda, nu}, horizon, k, rng), horizon);
    double sum = 0;
    for (auto x : m) sum += static_cast<double>(x);
    sampled += sum / static_cast<double>(horizon);
    oracle += gillespie_mean_active(lambda, nu, k, static_cast<double>(horizon), 1000 + s);
  }
  sampled /= seeds;
  oracle /= seeds;
  INFO("sampled " << sampled << " oracle " << oracle);
  CHECK(std::abs(sampled - oracle) <= 0.1 * oracle);
}

TEST_CASE("event streams are deterministic") {
  Rng a(99), b(99);
  CHECK(sample_population(MmkPopulation{1e-3, 1e-3}, 100000, 4, a) ==
        sample_population(MmkPopulation{1e-3, 1e-3}, 100000, 4, b));
}

TEST_CASE("ratio examples") {
  const std::vector<double> mu{0.9, 0.6, 0.3};
  const auto cp = linear_checkpoints(2000, 10);
  SUBCASE("oracle assignment gives ratio 1") {
    BernoulliEnvironment env(mu, 1);
    Rng rng(1);
    const auto ev = sample_population(StaticPopulation{2}, 2000, 3, rng);
    const auto tr = run_dynamic(env, fixed_factory(3, [](std::uint64_t id) { return id; }), ev, 2000, cp);
    CHECK(tr.ratio() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tr.oracle_rate() == doctest::Approx(1.5));
  }
  SUBCASE("permanent collision gives ratio 0") {
    BernoulliEnvironment env(mu, 1);
    Rng rng(1);
    const auto ev = sample_population(StaticPopulation{3}, 2000, 3, rng);
    const auto tr = run_dynamic(env, fixed_factory(3, [](std::uint64_t) { return 0; }), ev, 2000, cp);
    CHECK(tr.ratio() == 0.0);
    CHECK(tr.cumulative_regret.back() == doctest::Approx(1.8 * 2000));
  }
  SUBCASE("no players at all") {
    BernoulliEnvironment env(mu, 1);
    const std::vector<PopulationEvent> none;
    const auto tr = run_dynamic(env, fixed_factory(3, [](std::uint64_t) { return 0; }), none, 100, {});
    CHECK(tr.ratio() == 1.0);
    CHECK(tr.oracle_total == 0.0);
  }
}

TEST_CASE("ratio stays in [0, 1] and regret is nondecreasing") {
  const std::vector<double> mu{0.9, 0.8, 0.5, 0.4, 0.1};
  const auto cp = log_checkpoints(30000, 50);
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    BernoulliEnvironment env(mu, seed);
    Rng rng(seed + 100);
    const auto ev = sample_population(MmkPopulation{2e-3, 1e-3}, 30000, 5, rng);
    PolicyFactory factory = [seed](std::uint64_t id, std::size_t) -> std::unique_ptr<Policy> {
      const auto s = derive_seed(seed, 0, player_role(id));
      if (id % 2) return std::make_unique<RandomizedSelfishKlUcb>(5, s);
      return std::make_unique<SelfishKlUcb>(5, s);
    };
    const auto tr = run_dynamic(env, factory, ev, 30000, cp);
    CHECK(tr.ratio() >= 0.0);
    CHECK(tr.ratio() <= 1.0);
    CHECK(tr.achieved_total <= tr.oracle_total + 1e-9);
    CHECK(std::is_sorted(tr.cumulative_regret.begin(), tr.cumulative_regret.end()));
    for (auto m : tr.active_at) CHECK(m <= 5);
  }
}

TEST_CASE("players run on their own clocks") {
  // A player arriving at step 500 into an empty system starts with a fresh state.
  const std::vector<double> mu{0.2, 0.9};
  BernoulliEnvironment env(mu, 3);
  const std::vector<PopulationEvent> ev{{0, Kind::kArrival, 0}, {400, Kind::kDeparture, 0},
                                        {500, Kind::kArrival, 1}};
  PolicyFactory factory = [](std::uint64_t id, std::size_t) {
    return std::make_unique<SelfishKlUcb>(2, id + 1);
  };
  const std::vector<std::uint64_t> cp{1000};
  const auto tr = run_dynamic(env, factory, ev, 1000, cp);
  REQUIRE(tr.player_pull_counts.size() == 2);
  const auto& a = tr.player_pull_counts[0];
  const auto& b = tr.player_pull_counts[1];
  CHECK(a[0] + a[1] == 400);
  CHECK(b[0] + b[1] == 500);
  CHECK(tr.mean_active == doctest::Approx(0.9));
  CHECK(tr.arrivals == 2);
  CHECK(tr.departures == 1);
}

TEST_CASE("vanishing arrival rate reduces to the single-player static run") {
  const std::vector<double> mu{0.7, 0.5, 0.4};
  const std::uint64_t horizon = 20000;
  const auto cp = log_checkpoints(horizon, 30);
  const std::uint64_t player_seed = derive_seed(8, 0, player_role(0));

  BernoulliEnvironment env_a(mu, 55);
  std::vector<std::unique_ptr<Policy>> ps;
  ps.push_back(std::make_unique<RandomizedSelfishKlUcb>(3, player_seed));
  const auto st = run_static(env_a, ps, horizon, cp);

  BernoulliEnvironment env_b(mu, 55);
  Rng rng(9);
  const auto ev = sample_population(QuasiAsyncPopulation{1e-300, 3}, horizon, 3, rng);
  REQUIRE(ev.size() == 1);
  PolicyFactory factory = [&](std::uint64_t id, std::size_t) {
    return std::make_unique<RandomizedSelfishKlUcb>(3, derive_seed(8, 0, player_role(id)));
  };
  const auto dy = run_dynamic(env_b, factory, ev, horizon, cp);
  CHECK(dy.cumulative_regret == st.cumulative_regret);
  CHECK(dy.achieved_total == st.expected_reward);
  CHECK(dy.player_pull_counts[0] == st.pull_counts_at.back()[0]);
}

TEST_CASE("musical chairs in a dynamic run") {
  const std::vector<double> mu{0.9, 0.8, 0.2, 0.1};
  BernoulliEnvironment env(mu, 4, true);
  Rng rng(4);
  const auto ev = sample_population(StaticPopulation{2}, 20000, 4, rng);
  PolicyFactory factory = [](std::uint64_t id, std::size_t) {
    return std::make_unique<MusicalChairs>(4, 100 + id, MusicalChairsConfig{3000, std::nullopt}, true);
  };
  const std::vector<std::uint64_t> cp{20000};
  const auto tr = run_dynamic(env, factory, ev, 20000, cp);
  CHECK(tr.ratio() > 0.8);

  BernoulliEnvironment blind(mu, 4, false);
  CHECK_THROWS_AS(run_dynamic(blind, factory, ev, 100, {}), ConfigError);
}
