// Command-line front end: runs experiment configs and lists the shipped presets.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "mpmab/config.hpp"
#include "mpmab/errors.hpp"
#include "mpmab/harness.hpp"

namespace fs = std::filesystem;

namespace {

struct Invocation {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::string presets = MPMAB_PRESET_DIR;
};

void add_run_flags(CLI::App* cmd, Invocation& inv) {
  cmd->add_option("--config", inv.config, "experiment config file (.json may be omitted)")->required();
  cmd->add_option("--seed", inv.seed, "override the master seed");
  cmd->add_option("--out", inv.out, "output directory (overrides MPMAB_OUT_DIR and the config)");
  cmd->add_option("--workers", inv.workers, "worker threads")->check(CLI::PositiveNumber);
}

mpmab::ExperimentConfig load(const Invocation& inv) {
  auto cfg = mpmab::load_config(inv.config);
  if (inv.seed) cfg.set_seed(*inv.seed);
  return cfg;
}

fs::path output_dir(const Invocation& inv, const mpmab::ExperimentConfig& cfg) {
  if (!inv.out.empty()) return inv.out;
  if (const char* env = std::getenv("MPMAB_OUT_DIR"); env && *env) return fs::path(env) / cfg.name;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  return fs::path("out") / cfg.name;
}

std::string format_number(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

int run_static(const Invocation& inv) {
  const auto cfg = load(inv);
  const auto result = mpmab::run_experiment(cfg, {inv.workers, mpmab::RunMode::kRegret});
  const auto dir = output_dir(inv, cfg);
  mpmab::write_experiment(result, dir);
  const auto& a = result.aggregate;
  const auto& last = a.regret.back();
  const double max_total = *std::max_element(a.totals.begin(), a.totals.end());
  std::cout << cfg.name << ": " << a.totals.size() << " runs, T=" << cfg.horizon
            << ", mean final regret " << format_number(last.mean) << " +- " << format_number(last.half_width)
            << ", max total regret " << format_number(max_total) << " -> " << dir.string() << "\n";
  return 0;
}

int run_dynamic(const Invocation& inv) {
  const auto cfg = load(inv);
  const auto result = mpmab::run_experiment(cfg, {inv.workers, mpmab::RunMode::kRatio});
  const auto dir = output_dir(inv, cfg);
  mpmab::write_experiment(result, dir);
  const auto& a = result.aggregate;
  std::cout << cfg.name << ": " << a.ratios.size() << " runs, T=" << cfg.horizon << ", mean ratio "
            << format_number(a.ratio.mean) << " +- " << format_number(a.ratio.half_width) << " -> "
            << dir.string() << "\n";
  return 0;
}

int run_sweep(const Invocation& inv) {
  const auto cfg = load(inv);
  if (!cfg.sweep) throw mpmab::ConfigError("sweep configs need a 'sweep' section", "sweep");
  const auto result = mpmab::sweep(cfg, cfg.sweep->parameter, cfg.sweep->values, {inv.workers, {}});
  const auto dir = output_dir(inv, cfg);
  mpmab::write_sweep(result, dir);
  std::cout << cfg.name << ": " << mpmab::sweep_parameter_name(result.parameter) << " sweep, final mean regret";
  for (std::size_t i = 0; i < result.values.size(); ++i) {
    std::cout << (i ? ", " : " ") << format_number(result.values[i]) << "="
              << format_number(result.results[i].aggregate.regret.back().mean);
  }
  std::cout << " -> " << dir.string() << "\n";
  return 0;
}

int list_presets(const Invocation& inv) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(inv.presets)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    const auto cfg = mpmab::load_config(path);
    std::cout << path.stem().string() << "\t" << cfg.description << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized multi-player bandit simulator"};
  app.require_subcommand(1);
  Invocation inv;

  auto* run = app.add_subcommand("run", "static experiment: cumulative pseudo-regret");
  auto* dyn = app.add_subcommand("dynamic", "changing population: performance ratio");
  auto* swp = app.add_subcommand("sweep", "parameter sweep of a static experiment");
  auto* presets = app.add_subcommand("preset-list", "list the shipped presets");
  for (auto* cmd : {run, dyn, swp}) add_run_flags(cmd, inv);
  presets->add_option("--dir", inv.presets, "preset directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*run) return run_static(inv);
    if (*dyn) return run_dynamic(inv);
    if (*swp) return run_sweep(inv);
    return list_presets(inv);
  } catch (const mpmab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
  } catch (const mpmab::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return 1;
}
