#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mpmab/config.hpp"
#include "mpmab/dynamics.hpp"
#include "mpmab/simulator.hpp"

namespace mpmab {

// Summary statistics used by every aggregate. Sample standard deviation
// uses n - 1 and is 0 for a single value; percentiles are nearest-rank.
double mean_of(std::span<const double> xs);
double sample_std(std::span<const double> xs);
double ci95_half_width(std::span<const double> xs);  // 1.96 s / sqrt(n)
double nearest_rank_percentile(std::span<const double> xs, double pct);

struct Summary {
  double mean = 0.0;
  double half_width = 0.0;
  double p05 = 0.0;
  double p90 = 0.0;
};

Summary summarize(std::span<const double> xs);

enum class RunMode { kRegret, kRatio };

struct AggregateResult {
  // Regret mode: one summary per checkpoint plus per-run totals.
  std::vector<std::uint64_t> checkpoints;
  std::vector<Summary> regret;
  std::vector<double> totals;
  // Ratio mode.
  Summary ratio;
  std::vector<double> ratios;
  double mean_achieved_rate = 0.0;
  double mean_oracle_rate = 0.0;
  double mean_active = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  RunMode mode = RunMode::kRegret;
  std::vector<double> mu;
  std::vector<std::uint64_t> checkpoints;
  std::vector<RunTrace> regret_runs;
  std::vector<RatioTrace> ratio_runs;
  AggregateResult aggregate;
};

struct RunOptions {
  std::size_t workers = 1;
  // Defaults to kRegret for static populations and kRatio otherwise.
  std::optional<RunMode> mode;
};

// Runs fn(0) .. fn(n - 1) on up to `workers` threads. Rethrows the exception
// of the lowest failing index after all tasks finish.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

/// Runs every replication of `cfg` and aggregates them.
///
/// Replication r seeds its environment, population and player i streams
/// with derive_seed(cfg.seed, r, role); results are joined in replication
/// order, so the worker count never changes the output.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

// Writes trace.csv and totals.csv (regret mode) or ratio.csv, active.csv
// and trace.csv (ratio mode), then aggregate.csv and meta.json. Files are
// staged and moved into place only after all of them are written.
void write_experiment(const ExperimentResult& result, const std::filesystem::path& dir);

// `cfg` with the sweep parameter set to `value`.
ExperimentConfig apply_sweep_value(const ExperimentConfig& cfg, SweepParameter parameter, double value);

struct SweepResult {
  SweepParameter parameter;
  std::vector<double> values;
  std::vector<ExperimentResult> results;
};

SweepResult sweep(const ExperimentConfig& cfg, SweepParameter parameter, std::span<const double> values,
                  const RunOptions& opts = {});

// sweep.csv (long form aggregate), sweep_totals.csv and meta.json.
void write_sweep(const SweepResult& result, const std::filesystem::path& dir);

// Decimal with 17 significant digits.
std::string format_number(double x);

}  // namespace mpmab
