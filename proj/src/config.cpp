#include "mpmab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "mpmab/errors.hpp"
#include "mpmab/simulator.hpp"

namespace mpmab {

using nlohmann::json;

namespace {

// Reads the members of one JSON object and rejects the ones nobody asked for.
class Fields {
 public:
  Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError("expected an object", path_.empty() ? "<root>" : path_);
  }

  std::string key(std::string_view name) const {
    return path_.empty() ? std::string(name) : path_ + "." + std::string(name);
  }

  bool has(std::string_view name) const { return obj_.contains(std::string(name)); }

  const json& raw(std::string_view name) {
    const std::string k(name);
    if (!obj_.contains(k)) throw ConfigError("missing required key", key(name));
    used_.insert(k);
    return obj_.at(k);
  }

  template <class T>
  T get(std::string_view name) {
    const json& v = raw(name);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError("expected a number", key(name));
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
          throw ConfigError("expected a nonnegative integer", key(name));
        }
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("expected true or false", key(name));
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("expected a string", key(name));
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(e.what(), key(name));
    }
  }

  template <class T>
  T get(std::string_view name, T fallback) {
    return has(name) ? get<T>(name) : fallback;
  }

  void finish() const {
    for (const auto& [k, _] : obj_.items()) {
      if (!used_.count(k)) throw ConfigError("unknown key", key(k));
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

void require_probability(double p, const std::string& key) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("must lie in [0, 1]", key);
}

EnvironmentSpec parse_environment(const json& doc) {
  Fields f(doc, "environment");
  EnvironmentSpec env;
  const auto kind = f.get<std::string>("kind");
  env.sensing = f.get<bool>("sensing", false);
  if (kind == "explicit") {
    env.kind = EnvironmentSpec::Kind::kExplicit;
    const json& mu = f.raw("mu");
    if (!mu.is_array() || mu.empty()) throw ConfigError("expected a nonempty array", f.key("mu"));
    for (const auto& v : mu) {
      if (!v.is_number()) throw ConfigError("expected numbers", f.key("mu"));
      env.mu.push_back(v.get<double>());
      require_probability(env.mu.back(), f.key("mu"));
    }
  } else if (kind == "linspace") {
    env.kind = EnvironmentSpec::Kind::kLinspace;
    env.mu_high = f.get<double>("mu_high");
    env.mu_low = f.get<double>("mu_low");
    env.k = f.get<std::size_t>("k");
  } else if (kind == "uniform_perturbed") {
    env.kind = EnvironmentSpec::Kind::kUniformPerturbed;
    env.center = f.get<double>("center");
    env.width = f.get<double>("width");
    env.k = f.get<std::size_t>("k");
  } else if (kind == "gap") {
    env.kind = EnvironmentSpec::Kind::kGap;
    env.top = f.get<double>("top");
    env.mu_m = f.get<double>("mu_m");
    env.m = f.get<std::size_t>("m");
    env.bottom_high = f.get<double>("bottom_high");
    env.bottom_low = f.get<double>("bottom_low");
    env.k = f.get<std::size_t>("k");
  } else {
    throw ConfigError("unknown environment kind '" + kind + "'", f.key("kind"));
  }
  f.finish();
  return env;
}

PopulationModel parse_population(const json& doc) {
  Fields f(doc, "population");
  const auto kind = f.get<std::string>("kind");
  PopulationModel model;
  if (kind == "static") {
    model = StaticPopulation{f.get<std::size_t>("players")};
  } else if (kind == "quasi_async") {
    model = QuasiAsyncPopulation{f.get<double>("lambda"), f.get<std::size_t>("max_players")};
  } else if (kind == "mmk") {
    model = MmkPopulation{f.get<double>("lambda"), f.get<double>("nu")};
  } else {
    throw ConfigError("unknown population kind '" + kind + "'", f.key("kind"));
  }
  f.finish();
  return model;
}

PolicySpec parse_policy(const json& doc, const std::string& path) {
  Fields f(doc, path);
  PolicySpec spec;
  const auto kind_name = f.get<std::string>("kind");
  const auto kind = parse_policy_kind(kind_name);
  if (!kind) throw ConfigError("unknown policy kind '" + kind_name + "'", f.key("kind"));
  spec.kind = *kind;

  auto parse_tie = [&] {
    const auto tie = f.get<std::string>("tie_break", "lowest");
    if (tie == "lowest") {
      spec.tie = TieBreak::kLowestIndex;
    } else if (tie == "random") {
      spec.tie = TieBreak::kRandom;
    } else {
      throw ConfigError("expected 'lowest' or 'random'", f.key("tie_break"));
    }
  };
  auto parse_klucb = [&] {
    spec.c = f.get<double>("c", 0.0);
    if (!(spec.c >= 0.0)) throw ConfigError("must be >= 0", f.key("c"));
    if (f.has("solver")) {
      Fields s(f.raw("solver"), f.key("solver"));
      spec.solver.tolerance = s.get<double>("tolerance", spec.solver.tolerance);
      spec.solver.max_iterations = s.get<int>("max_iterations", spec.solver.max_iterations);
      s.finish();
      try {
        spec.solver.validate();
      } catch (const ConfigError& e) {
        throw ConfigError(e.message(), f.key(e.key()));
      }
    }
  };

  switch (spec.kind) {
    case PolicyKind::kSelfishKlUcb:
      parse_klucb();
      parse_tie();
      break;
    case PolicyKind::kRandomizedSelfishKlUcb:
      parse_klucb();
      break;
    case PolicyKind::kSelfishUcb1:
      parse_tie();
      break;
    case PolicyKind::kFixedArm:
      spec.arm = f.get<std::size_t>("arm");
      break;
    case PolicyKind::kMusicalChairs: {
      if (f.has("exploration_steps")) spec.exploration_steps = f.get<std::uint64_t>("exploration_steps");
      const auto m_hat = f.get<std::string>("m_hat", "estimate");
      if (m_hat == "known") {
        spec.known_players = true;
      } else if (m_hat != "estimate") {
        throw ConfigError("expected 'estimate' or 'known'", f.key("m_hat"));
      }
      break;
    }
  }
  f.finish();
  return spec;
}

CheckpointSpec parse_checkpoints(const json& doc) {
  Fields f(doc, "checkpoints");
  CheckpointSpec cp;
  const auto kind = f.get<std::string>("kind");
  if (kind == "log" || kind == "linear") {
    cp.kind = kind == "log" ? CheckpointSpec::Kind::kLog : CheckpointSpec::Kind::kLinear;
    cp.count = f.get<std::size_t>("count", cp.count);
    if (cp.count == 0) throw ConfigError("must be positive", f.key("count"));
  } else if (kind == "explicit") {
    cp.kind = CheckpointSpec::Kind::kExplicit;
    const json& steps = f.raw("steps");
    if (!steps.is_array() || steps.empty()) throw ConfigError("expected a nonempty array", f.key("steps"));
    for (const auto& s : steps) {
      if (!s.is_number_unsigned()) throw ConfigError("expected positive integers", f.key("steps"));
      cp.steps.push_back(s.get<std::uint64_t>());
    }
  } else {
    throw ConfigError("unknown checkpoint kind '" + kind + "'", f.key("kind"));
  }
  f.finish();
  return cp;
}

SweepSpec parse_sweep(const json& doc) {
  Fields f(doc, "sweep");
  SweepSpec sweep;
  const auto param = f.get<std::string>("parameter");
  if (param == "mu_low") {
    sweep.parameter = SweepParameter::kMuLow;
  } else if (param == "delta") {
    sweep.parameter = SweepParameter::kDelta;
  } else if (param == "m_players") {
    sweep.parameter = SweepParameter::kMPlayers;
  } else {
    throw ConfigError("expected mu_low, delta or m_players", f.key("parameter"));
  }
  const json& values = f.raw("values");
  if (!values.is_array() || values.empty()) throw ConfigError("expected a nonempty array", f.key("values"));
  for (const auto& v : values) {
    if (!v.is_number()) throw ConfigError("expected numbers", f.key("values"));
    sweep.values.push_back(v.get<double>());
  }
  f.finish();
  return sweep;
}

}  // namespace

std::vector<std::uint64_t> CheckpointSpec::grid(std::uint64_t horizon) const {
  switch (kind) {
    case Kind::kLog: return log_checkpoints(horizon, count);
    case Kind::kLinear: return linear_checkpoints(horizon, count);
    case Kind::kExplicit: return steps;
  }
  return {};
}

std::string_view sweep_parameter_name(SweepParameter p) {
  switch (p) {
    case SweepParameter::kMuLow: return "mu_low";
    case SweepParameter::kDelta: return "delta";
    case SweepParameter::kMPlayers: return "m_players";
  }
  return "unknown";
}

const PolicySpec& ExperimentConfig::policy_for(std::size_t player) const {
  return policies.size() == 1 ? policies.front() : policies.at(player);
}

void ExperimentConfig::set_seed(std::uint64_t s) {
  seed = s;
  if (source.is_object()) source["seed"] = s;
}

ExperimentConfig parse_config(const json& doc) {
  Fields f(doc, "");
  ExperimentConfig cfg;
  cfg.source = doc;
  cfg.name = f.get<std::string>("name", "experiment");
  cfg.description = f.get<std::string>("description", "");
  cfg.environment = parse_environment(f.raw("environment"));
  cfg.population = parse_population(f.raw("population"));
  if (f.has("policy") == f.has("policies")) {
    throw ConfigError("exactly one of 'policy' or 'policies' is required", "policy");
  }
  if (f.has("policy")) {
    cfg.policies.push_back(parse_policy(f.raw("policy"), "policy"));
  } else {
    const json& list = f.raw("policies");
    if (!list.is_array() || list.empty()) throw ConfigError("expected a nonempty array", "policies");
    for (std::size_t i = 0; i < list.size(); ++i) {
      cfg.policies.push_back(parse_policy(list[i], "policies[" + std::to_string(i) + "]"));
    }
  }
  cfg.horizon = f.get<std::uint64_t>("horizon");
  cfg.replications = f.get<std::size_t>("replications", 1);
  cfg.seed = f.get<std::uint64_t>("seed", 0);
  if (f.has("checkpoints")) cfg.checkpoints = parse_checkpoints(f.raw("checkpoints"));
  cfg.output_dir = f.get<std::string>("output_dir", "");
  if (f.has("sweep")) cfg.sweep = parse_sweep(f.raw("sweep"));
  f.finish();
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::filesystem::path resolved = path;
  if (!std::filesystem::exists(resolved)) {
    auto with_ext = path;
    with_ext += ".json";
    if (std::filesystem::exists(with_ext)) resolved = with_ext;
  }
  std::ifstream in(resolved);
  if (!in) throw IoError("cannot open config file", path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what(), resolved.string());
  }
  return parse_config(doc);
}

void validate(const ExperimentConfig& cfg) {
  const auto& env = cfg.environment;
  using Kind = EnvironmentSpec::Kind;
  if (env.kind != Kind::kExplicit && env.k == 0) throw ConfigError("must be >= 1", "environment.k");
  if (env.kind == Kind::kLinspace) {
    require_probability(env.mu_high, "environment.mu_high");
    require_probability(env.mu_low, "environment.mu_low");
  } else if (env.kind == Kind::kUniformPerturbed) {
    if (!(env.width >= 0.0)) throw ConfigError("must be >= 0", "environment.width");
    if (!(env.center - env.width / 2 >= 0.0 && env.center + env.width / 2 <= 1.0)) {
      throw ConfigError("interval escapes [0, 1]", "environment.width");
    }
  } else if (env.kind == Kind::kGap) {
    for (auto [v, k] : {std::pair{env.top, "environment.top"}, {env.mu_m, "environment.mu_m"},
                        {env.bottom_high, "environment.bottom_high"}, {env.bottom_low, "environment.bottom_low"}}) {
      require_probability(v, k);
    }
    if (env.m < 1 || env.m >= env.k) throw ConfigError("must lie in [1, k)", "environment.m");
  }
  const std::size_t k = env.arms();
  validate(cfg.population, k);

  if (cfg.horizon == 0) throw ConfigError("must be >= 1", "horizon");
  if (cfg.replications == 0) throw ConfigError("must be >= 1", "replications");
  if (cfg.policies.empty()) throw ConfigError("missing", "policy");
  if (cfg.policies.size() > 1) {
    const auto* s = std::get_if<StaticPopulation>(&cfg.population);
    if (!s) throw ConfigError("per-player policies need a static population", "policies");
    if (s->players != cfg.policies.size()) {
      throw ConfigError("one policy per player required", "policies");
    }
  }
  for (std::size_t i = 0; i < cfg.policies.size(); ++i) {
    const auto& p = cfg.policies[i];
    const std::string key = cfg.policies.size() == 1 ? "policy" : "policies[" + std::to_string(i) + "]";
    if (p.kind == PolicyKind::kFixedArm && p.arm >= k) throw ConfigError("arm index out of range", key + ".arm");
    if (p.kind == PolicyKind::kMusicalChairs && !env.sensing) {
      throw ConfigError("musical_chairs needs environment.sensing = true", key + ".kind");
    }
  }
  if (cfg.checkpoints.kind == CheckpointSpec::Kind::kExplicit) {
    const auto& s = cfg.checkpoints.steps;
    if (s.front() < 1 || s.back() > cfg.horizon || std::adjacent_find(s.begin(), s.end(), std::greater_equal<>()) != s.end()) {
      throw ConfigError("steps must be strictly increasing within [1, horizon]", "checkpoints.steps");
    }
  }
  if (cfg.sweep) {
    const auto& sw = *cfg.sweep;
    switch (sw.parameter) {
      case SweepParameter::kMuLow:
        if (env.kind != Kind::kLinspace) throw ConfigError("mu_low sweeps need a linspace environment", "sweep.parameter");
        for (double v : sw.values) require_probability(v, "sweep.values");
        break;
      case SweepParameter::kDelta:
        if (env.kind != Kind::kGap) throw ConfigError("delta sweeps need a gap environment", "sweep.parameter");
        for (double v : sw.values) require_probability(v, "sweep.values");
        break;
      case SweepParameter::kMPlayers:
        if (!is_static(cfg.population)) throw ConfigError("m_players sweeps need a static population", "sweep.parameter");
        if (cfg.policies.size() != 1) throw ConfigError("m_players sweeps need a single policy", "sweep.parameter");
        for (double v : sw.values) {
          if (v < 1 || v > static_cast<double>(k) || v != std::floor(v)) {
            throw ConfigError("player counts must be integers in [1, K]", "sweep.values");
          }
        }
        break;
    }
  }
}

std::vector<double> gen_linspace_mu(double mu_high, double mu_low, std::size_t k) {
  if (!(mu_high >= 0.0 && mu_high <= 1.0 && mu_low >= 0.0 && mu_low <= 1.0)) {
    throw std::domain_error("linspace endpoints must lie in [0, 1]");
  }
  if (k == 0) throw std::domain_error("need at least one arm");
  if (k == 1) return {mu_high};
  std::vector<double> mu(k);
  const double span = static_cast<double>(k - 1);
  for (std::size_t j = 1; j <= k; ++j) {
    mu[j - 1] = mu_high * static_cast<double>(k - j) / span + mu_low * static_cast<double>(j - 1) / span;
  }
  return mu;
}

std::vector<double> gen_perturbed_mu(double center, double width, std::size_t k, Rng& rng) {
  const double lo = center - width / 2;
  const double hi = center + width / 2;
  if (!(width >= 0.0) || !(lo >= 0.0 && hi <= 1.0)) throw std::domain_error("perturbation interval escapes [0, 1]");
  std::vector<double> mu(k);
  for (auto& m : mu) m = lo + width * rng.uniform();
  return mu;
}

std::vector<double> resolve_mu(const EnvironmentSpec& env, std::uint64_t master_seed) {
  switch (env.kind) {
    case EnvironmentSpec::Kind::kExplicit: return env.mu;
    case EnvironmentSpec::Kind::kLinspace: return gen_linspace_mu(env.mu_high, env.mu_low, env.k);
    case EnvironmentSpec::Kind::kUniformPerturbed: {
      Rng rng(derive_seed(master_seed, 0, static_cast<std::uint64_t>(StreamRole::kEnvGenerator)));
      return gen_perturbed_mu(env.center, env.width, env.k, rng);
    }
    case EnvironmentSpec::Kind::kGap: {
      auto mu = gen_linspace_mu(env.top, env.mu_m, env.m);
      const auto bottom = gen_linspace_mu(env.bottom_high, env.bottom_low, env.k - env.m);
      mu.insert(mu.end(), bottom.begin(), bottom.end());
      return mu;
    }
  }
  return {};
}

}  // namespace mpmab
