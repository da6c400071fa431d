#include "mpmab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "mpmab/errors.hpp"
#include "mpmab/version.hpp"

namespace mpmab {

namespace fs = std::filesystem;

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double ci95_half_width(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return 1.96 * sample_std(xs) / std::sqrt(static_cast<double>(xs.size()));
}

double nearest_rank_percentile(std::span<const double> xs, double pct) {
  if (xs.empty()) return 0.0;
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(pct * n / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

Summary summarize(std::span<const double> xs) {
  return {mean_of(xs), ci95_half_width(xs), nearest_rank_percentile(xs, 5.0),
          nearest_rank_percentile(xs, 90.0)};
}

std::string format_number(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

std::vector<std::unique_ptr<Policy>> make_static_players(const ExperimentConfig& cfg, std::size_t players,
                                                         std::size_t k, std::uint64_t replication) {
  std::vector<std::unique_ptr<Policy>> out;
  for (std::size_t i = 0; i < players; ++i) {
    PolicyContext ctx{k, cfg.horizon, cfg.environment.sensing, players,
                      derive_seed(cfg.seed, replication, player_role(i))};
    out.push_back(make_policy(cfg.policy_for(i), ctx));
  }
  return out;
}

AggregateResult aggregate_regret(std::span<const RunTrace> runs, std::span<const std::uint64_t> checkpoints) {
  AggregateResult agg;
  agg.checkpoints.assign(checkpoints.begin(), checkpoints.end());
  std::vector<double> column(runs.size());
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    for (std::size_t r = 0; r < runs.size(); ++r) column[r] = runs[r].cumulative_regret[c];
    agg.regret.push_back(summarize(column));
  }
  for (const auto& run : runs) agg.totals.push_back(run.total_regret());
  return agg;
}

AggregateResult aggregate_ratio(std::span<const RatioTrace> runs) {
  AggregateResult agg;
  std::vector<double> achieved, oracle, active;
  for (const auto& run : runs) {
    agg.ratios.push_back(run.ratio());
    achieved.push_back(run.achieved_rate());
    oracle.push_back(run.oracle_rate());
    active.push_back(run.mean_active);
  }
  agg.ratio = summarize(agg.ratios);
  agg.mean_achieved_rate = mean_of(achieved);
  agg.mean_oracle_rate = mean_of(oracle);
  agg.mean_active = mean_of(active);
  return agg;
}

std::string_view mode_name(RunMode mode) { return mode == RunMode::kRegret ? "regret" : "ratio"; }

nlohmann::json metadata(const ExperimentResult& r) {
  nlohmann::json meta;
  meta["name"] = r.config.name;
  meta["config"] = r.config.source;
  meta["mode"] = mode_name(r.mode);
  meta["mu"] = r.mu;
  meta["master_seed"] = r.config.seed;
  meta["replications"] = r.config.replications;
  meta["seed_scheme"] =
      "splitmix64: seed = mix64(mix64(master) ^ (replication << 24 | role)); "
      "roles: environment=0, population=1, environment_generator=2 (replication 0), player i=16+i";
  meta["metric"] = r.mode == RunMode::kRegret
                       ? "cumulative pseudo-regret: oracle rate minus expected reward of the chosen, collision-discounted arms"
                       : "performance ratio R/R*: expected reward per step over oracle rate with the instantaneous M(t)";
  meta["code_version"] = kVersion;
  nlohmann::json mc = nlohmann::json::array();
  for (const auto& p : r.config.policies) {
    if (p.kind == PolicyKind::kMusicalChairs) mc.push_back(p.known_players ? "known" : "estimated");
  }
  if (!mc.empty()) meta["musical_chairs_m_hat"] = mc;
  return meta;
}

// Collects output files in a staging directory, then moves them into place.
class StagedWriter {
 public:
  explicit StagedWriter(fs::path dir) : dir_(std::move(dir)), stage_(dir_ / ".staging") {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory (" + ec.message() + ")", dir_.string());
    fs::remove_all(stage_, ec);
    fs::create_directories(stage_, ec);
    if (ec) throw IoError("cannot create staging directory (" + ec.message() + ")", stage_.string());
  }

  ~StagedWriter() {
    std::error_code ec;
    fs::remove_all(stage_, ec);
  }

  void add(const std::string& name, const std::string& content) {
    const fs::path path = stage_ / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    out.close();
    if (!out) throw IoError("cannot write output file", (dir_ / name).string());
    names_.push_back(name);
  }

  void commit() {
    for (const auto& name : names_) {
      std::error_code ec;
      fs::rename(stage_ / name, dir_ / name, ec);
      if (ec) throw IoError("cannot move output file into place (" + ec.message() + ")", (dir_ / name).string());
    }
  }

 private:
  fs::path dir_;
  fs::path stage_;
  std::vector<std::string> names_;
};

void append_regret_csv(std::ostringstream& agg, const AggregateResult& a) {
  for (std::size_t c = 0; c < a.checkpoints.size(); ++c) {
    const auto& s = a.regret[c];
    agg << a.checkpoints[c] << ',' << format_number(s.mean) << ',' << format_number(s.half_width) << ','
        << format_number(s.p05) << ',' << format_number(s.p90) << '\n';
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  validate(cfg);
  ExperimentResult result;
  result.config = cfg;
  result.mode = opts.mode.value_or(is_static(cfg.population) ? RunMode::kRegret : RunMode::kRatio);
  if (result.mode == RunMode::kRegret && !is_static(cfg.population)) {
    throw ConfigError("regret runs need a static population; use the dynamic mode", "population.kind");
  }
  result.mu = resolve_mu(cfg.environment, cfg.seed);
  result.checkpoints = cfg.checkpoints.grid(cfg.horizon);
  const std::size_t k = result.mu.size();
  const std::size_t reps = cfg.replications;

  if (result.mode == RunMode::kRegret) {
    const std::size_t players = std::get<StaticPopulation>(cfg.population).players;
    result.regret_runs.resize(reps);
    parallel_for(reps, opts.workers, [&](std::size_t r) {
      BernoulliEnvironment env(result.mu, derive_seed(cfg.seed, r, static_cast<std::uint64_t>(StreamRole::kEnvironment)),
                               cfg.environment.sensing);
      auto policies = make_static_players(cfg, players, k, r);
      result.regret_runs[r] = run_static(env, policies, cfg.horizon, result.checkpoints);
    });
    result.aggregate = aggregate_regret(result.regret_runs, result.checkpoints);
  } else {
    result.ratio_runs.resize(reps);
    parallel_for(reps, opts.workers, [&](std::size_t r) {
      BernoulliEnvironment env(result.mu, derive_seed(cfg.seed, r, static_cast<std::uint64_t>(StreamRole::kEnvironment)),
                               cfg.environment.sensing);
      Rng population_rng(derive_seed(cfg.seed, r, static_cast<std::uint64_t>(StreamRole::kPopulation)));
      const auto events = sample_population(cfg.population, cfg.horizon, k, population_rng);
      PolicyFactory factory = [&](std::uint64_t id, std::size_t active) {
        PolicyContext ctx{k, cfg.horizon, cfg.environment.sensing, active, derive_seed(cfg.seed, r, player_role(id))};
        return make_policy(cfg.policy_for(id), ctx);
      };
      result.ratio_runs[r] = run_dynamic(env, factory, events, cfg.horizon, result.checkpoints);
    });
    result.aggregate = aggregate_ratio(result.ratio_runs);
  }
  return result;
}

void write_experiment(const ExperimentResult& result, const fs::path& dir) {
  StagedWriter writer(dir);
  const auto& a = result.aggregate;
  if (result.mode == RunMode::kRegret) {
    std::ostringstream trace, totals, agg;
    trace << "run_id,checkpoint_t,cum_pseudo_regret\n";
    totals << "run_id,total_regret\n";
    for (std::size_t r = 0; r < result.regret_runs.size(); ++r) {
      const auto& run = result.regret_runs[r];
      for (std::size_t c = 0; c < run.checkpoints.size(); ++c) {
        trace << r << ',' << run.checkpoints[c] << ',' << format_number(run.cumulative_regret[c]) << '\n';
      }
      totals << r << ',' << format_number(run.total_regret()) << '\n';
    }
    agg << "checkpoint_t,mean_cum_pseudo_regret,ci_half_width,p05,p90\n";
    append_regret_csv(agg, a);
    writer.add("trace.csv", trace.str());
    writer.add("totals.csv", totals.str());
    writer.add("aggregate.csv", agg.str());
  } else {
    std::ostringstream ratio, active, trace, agg;
    ratio << "run_id,R,R_star,ratio\n";
    active << "run_id,checkpoint_t,active_players\n";
    trace << "run_id,checkpoint_t,cum_pseudo_regret\n";
    for (std::size_t r = 0; r < result.ratio_runs.size(); ++r) {
      const auto& run = result.ratio_runs[r];
      ratio << r << ',' << format_number(run.achieved_rate()) << ',' << format_number(run.oracle_rate()) << ','
            << format_number(run.ratio()) << '\n';
      for (std::size_t c = 0; c < run.active_at.size(); ++c) {
        active << r << ',' << run.checkpoints[c] << ',' << run.active_at[c] << '\n';
        trace << r << ',' << run.checkpoints[c] << ',' << format_number(run.cumulative_regret[c]) << '\n';
      }
    }
    agg << "runs,mean_ratio,ci_half_width,p05,p90,mean_R,mean_R_star,mean_active\n";
    agg << a.ratios.size() << ',' << format_number(a.ratio.mean) << ',' << format_number(a.ratio.half_width) << ','
        << format_number(a.ratio.p05) << ',' << format_number(a.ratio.p90) << ','
        << format_number(a.mean_achieved_rate) << ',' << format_number(a.mean_oracle_rate) << ','
        << format_number(a.mean_active) << '\n';
    writer.add("ratio.csv", ratio.str());
    writer.add("active.csv", active.str());
    writer.add("trace.csv", trace.str());
    writer.add("aggregate.csv", agg.str());
  }
  writer.add("meta.json", metadata(result).dump(2) + "\n");
  writer.commit();
}

ExperimentConfig apply_sweep_value(const ExperimentConfig& cfg, SweepParameter parameter, double value) {
  ExperimentConfig out = cfg;
  out.sweep.reset();
  switch (parameter) {
    case SweepParameter::kMuLow:
      if (out.environment.kind != EnvironmentSpec::Kind::kLinspace) {
        throw ConfigError("mu_low sweeps need a linspace environment", "sweep.parameter");
      }
      out.environment.mu_low = value;
      if (out.source.is_object()) out.source["environment"]["mu_low"] = value;
      break;
    case SweepParameter::kDelta:
      if (out.environment.kind != EnvironmentSpec::Kind::kGap) {
        throw ConfigError("delta sweeps need a gap environment", "sweep.parameter");
      }
      out.environment.mu_m = value;
      if (out.source.is_object()) out.source["environment"]["mu_m"] = value;
      break;
    case SweepParameter::kMPlayers: {
      if (!is_static(out.population) || out.policies.size() != 1) {
        throw ConfigError("m_players sweeps need a static population with one policy", "sweep.parameter");
      }
      if (value < 1 || value != std::floor(value)) throw ConfigError("player count must be a positive integer", "sweep.values");
      const auto players = static_cast<std::size_t>(value);
      out.population = StaticPopulation{players};
      if (out.source.is_object()) out.source["population"]["players"] = players;
      break;
    }
  }
  if (out.source.is_object()) out.source.erase("sweep");
  validate(out);
  return out;
}

SweepResult sweep(const ExperimentConfig& cfg, SweepParameter parameter, std::span<const double> values,
                  const RunOptions& opts) {
  SweepResult out{parameter, {values.begin(), values.end()}, {}};
  for (double v : values) {
    const auto point = apply_sweep_value(cfg, parameter, v);
    RunOptions o = opts;
    o.mode = RunMode::kRegret;
    out.results.push_back(run_experiment(point, o));
  }
  return out;
}

void write_sweep(const SweepResult& result, const fs::path& dir) {
  StagedWriter writer(dir);
  const auto param = sweep_parameter_name(result.parameter);
  std::ostringstream agg, totals;
  agg << "parameter,value,checkpoint_t,mean_cum_pseudo_regret,ci_half_width,p05,p90\n";
  totals << "parameter,value,run_id,total_regret\n";
  nlohmann::json meta;
  meta["parameter"] = param;
  meta["values"] = result.values;
  meta["points"] = nlohmann::json::array();
  for (std::size_t i = 0; i < result.results.size(); ++i) {
    const auto& r = result.results[i];
    const std::string value = format_number(result.values[i]);
    std::ostringstream rows;
    append_regret_csv(rows, r.aggregate);
    std::istringstream lines(rows.str());
    for (std::string line; std::getline(lines, line);) agg << param << ',' << value << ',' << line << '\n';
    for (std::size_t run = 0; run < r.aggregate.totals.size(); ++run) {
      totals << param << ',' << value << ',' << run << ',' << format_number(r.aggregate.totals[run]) << '\n';
    }
    meta["points"].push_back(metadata(r));
  }
  meta["code_version"] = kVersion;
  writer.add("sweep.csv", agg.str());
  writer.add("sweep_totals.csv", totals.str());
  writer.add("meta.json", meta.dump(2) + "\n");
  writer.commit();
}

}  // namespace mpmab
