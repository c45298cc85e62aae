#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mfp/cli/run_config.hpp"
#include "mfp/data/series.hpp"

namespace mfp::cli {

/// Command-line overrides applied on top of the run config.
struct Overrides {
  std::optional<std::uint64_t> seed; ///< train seed and dataset seed
  std::optional<std::size_t> futures;
  std::optional<Variant> variant;
  std::optional<std::size_t> iterations;
};

/// Loads `config_path` (or defaults rooted at the working directory), applies
/// the overrides and validates.
RunConfig resolve_config(const std::optional<std::filesystem::path>& config_path,
                         const Overrides& overrides);

enum class Baseline { nearest_neighbor, ridge };
std::optional<Baseline> parse_baseline(const std::string& name) noexcept;

/// Merchant CSVs of a data directory, sorted by file name.
std::vector<data::MultivariateSeries> load_dataset(const std::filesystem::path& dir);

/// Train/test split of one series per the run config; the test part carries
/// `history` warm-up hours.
data::Split split_series(const data::MultivariateSeries& series, const RunConfig& config);

/// Writes one CSV per merchant plus dataset.json into `out_dir`.
void cmd_generate(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

/// Trains per merchant (or pooled) and writes checkpoint, loss_trace.csv and
/// summary.json under `out_dir`/<merchant or "pooled">.
void cmd_train(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

/// Evaluates checkpoints under `checkpoint_dir` (or a baseline) on each
/// merchant's test split and writes reports under `out_dir`/<model id>.
void cmd_evaluate(const RunConfig& config, const std::filesystem::path& checkpoint_dir,
                  std::optional<Baseline> baseline, const std::filesystem::path& out_dir,
                  std::ostream& log);

/// Predicts the next horizon from the last history hours of `csv_path`.
/// Writes futures.csv, activations.csv and, with an expert checkpoint,
/// expert.csv.
void cmd_predict(const std::filesystem::path& checkpoint_dir, const std::filesystem::path& csv_path,
                 const std::optional<std::filesystem::path>& expert_dir,
                 const std::filesystem::path& out_dir, std::ostream& log);

/// Ablation table over the five architecture variants, or with `scalability`
/// the parameter/timing sweep of full vs model_ensemble over f in {1, 3, 12}.
void cmd_ablate(const RunConfig& config, bool scalability, const std::filesystem::path& out_dir,
                std::ostream& log);

} // namespace mfp::cli
