#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mstd/agents.hpp"

namespace mstd {

struct ExperimentConfig {
  std::string env = "pendulum";
  AgentConfig agent;
  long total_steps = 30000;
  long eval_every = 1000;
  int eval_episodes = 5;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string out_dir = "runs";
};

/// Throws ConfigError on any violated invariant (unknown env or algo, L < 1,
/// steps <= 0, empty or duplicate seeds, bad hyperparameters).
void validate_experiment(const ExperimentConfig& config);

/// Reads a `key = value` config file. Bracketed section headers group lines
/// visually; keys live in one flat namespace. `#` and `;` start comments.
std::map<std::string, std::string> read_config_file(const std::string& path);

/// Applies entries onto a config, by key name. Unknown keys and unparsable
/// values raise ConfigError naming the field.
void apply_config_entries(ExperimentConfig& config,
                          const std::map<std::string, std::string>& entries);

/// File values first (when a path is given), then overrides on top, then
/// full validation.
ExperimentConfig parse_config(const std::optional<std::string>& file_path,
                              const std::map<std::string, std::string>& overrides);

struct SummaryStat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, n-1 denominator
  int n = 0;
  bool single_seed = false;  // n = 1: std pinned to 0
};

/// ContractError when empty.
SummaryStat aggregate_seeds(const std::vector<double>& final_returns);

/// "123.4±5.6" with one fractional digit on both sides.
std::string format_mean_std(const SummaryStat& stat);

/// Header `step,episode,episode_return,critic_loss,actor_loss,wall_ms`, one
/// row per line, reals printed with %.17g so reads round-trip exactly.
void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows);

/// Inverse of write_metrics_csv. ConfigError with the 1-based line number on
/// a bad header, malformed row, or step going backwards.
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::string eval_csv;
  std::string train_csv;
  double final_return = 0.0;  // mean over the last 20 evaluation episodes
  bool failed = false;
  std::string error;
};

struct ExperimentResult {
  std::vector<SeedOutcome> outcomes;
  SummaryStat summary;  // over the successful seeds
  std::string summary_path;
};

/// Runs every seed in order: train, write <out>/<run>_seed<k>_{eval,train}.csv,
/// then a summary.json with the cross-seed statistic of the final returns.
/// A seed that throws is recorded under "warnings" and excluded from the
/// aggregate; if every seed fails the first error is rethrown.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Renders evaluation CSVs as one SVG: per-seed faint traces, a mean line,
/// and a +-1 sample-std band, all interpolated onto a common step grid.
/// ContractError when the list is empty.
void emit_learning_curve(const std::vector<std::string>& csv_paths,
                         const std::string& out_path);

/// The step-size grid for the base config's family: the single-step
/// baseline, multi-step L in {2,3,4}, and multi-state L in {2,3,4} for both
/// action modes, each writing into its own subdirectory of base.out_dir.
std::vector<ExperimentConfig> sweep_grid(const ExperimentConfig& base);

/// Subdirectory / run label for a sweep cell, e.g. "msddpg_L3_generated".
std::string run_label(const ExperimentConfig& config);

}  // namespace mstd
