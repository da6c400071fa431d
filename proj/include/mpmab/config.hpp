#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mpmab/dynamics.hpp"
#include "mpmab/policy.hpp"

namespace mpmab {

struct EnvironmentSpec {
  enum class Kind { kExplicit, kLinspace, kUniformPerturbed, kGap };

  Kind kind = Kind::kExplicit;
  std::vector<double> mu;           // explicit
  double mu_high = 0.9;             // linspace
  double mu_low = 0.1;              // linspace
  std::size_t k = 0;                // linspace, uniform_perturbed, gap
  double center = 0.5;              // uniform_perturbed
  double width = 0.02;              // uniform_perturbed
  // gap: top m arms spaced from top down to mu_m, the rest from
  // bottom_high down to bottom_low.
  double top = 0.99;
  double mu_m = 0.9;
  std::size_t m = 1;
  double bottom_high = 0.8;
  double bottom_low = 0.7;
  bool sensing = false;

  std::size_t arms() const { return kind == Kind::kExplicit ? mu.size() : k; }
};

struct CheckpointSpec {
  enum class Kind { kLog, kLinear, kExplicit };

  Kind kind = Kind::kLog;
  std::size_t count = 200;
  std::vector<std::uint64_t> steps;  // explicit

  std::vector<std::uint64_t> grid(std::uint64_t horizon) const;
};

enum class SweepParameter { kMuLow, kDelta, kMPlayers };

std::string_view sweep_parameter_name(SweepParameter p);

struct SweepSpec {
  SweepParameter parameter = SweepParameter::kMuLow;
  std::vector<double> values;
};

struct ExperimentConfig {
  std::string name;
  std::string description;
  EnvironmentSpec environment;
  PopulationModel population = StaticPopulation{1};
  std::vector<PolicySpec> policies;  // a single entry applies to every player
  std::uint64_t horizon = 0;
  std::size_t replications = 1;
  std::uint64_t seed = 0;
  CheckpointSpec checkpoints;
  std::string output_dir;
  std::optional<SweepSpec> sweep;

  nlohmann::json source;  // the parsed document, echoed into metadata

  const PolicySpec& policy_for(std::size_t player) const;
  void set_seed(std::uint64_t s);
};

// Parses and validates a config document. Unknown keys, missing keys,
// wrong types and out-of-range values raise ConfigError naming the key.
ExperimentConfig parse_config(const nlohmann::json& doc);

// Reads a config file; falls back to `path`.json when `path` does not exist.
ExperimentConfig load_config(const std::filesystem::path& path);

void validate(const ExperimentConfig& cfg);

/// Linearly spaced means from mu_high down to mu_low.
std::vector<double> gen_linspace_mu(double mu_high, double mu_low, std::size_t k);

/// k i.i.d. uniform means on [center - width/2, center + width/2].
std::vector<double> gen_perturbed_mu(double center, double width, std::size_t k, Rng& rng);

// Arm means of the environment; random kinds draw from the experiment's
// generator stream.
std::vector<double> resolve_mu(const EnvironmentSpec& env, std::uint64_t master_seed);

}  // namespace mpmab
