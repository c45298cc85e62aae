#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include "mfp/data/generator.hpp"
#include "mfp/forecaster/config.hpp"
#include "mfp/io/json_config.hpp"
#include "mfp/training/train.hpp"

namespace mfp::cli {

/// Environment variable naming the default data directory.
inline constexpr const char* kDataRootEnv = "MFP_DATA_ROOT";

struct DatasetConfig {
  std::size_t merchants = 4;
  std::string prefix = "synthetic";
  data::GeneratorConfig generator; ///< seed is the dataset seed; merchant_id is ignored
};

struct SplitConfig {
  /// First test hour; when unset the last `test_days` days of each series are test.
  std::optional<data::HourStamp> train_end;
  std::size_t test_days = 7;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  DatasetConfig dataset;
  SplitConfig split;
  bool pooled = false;       ///< one model over all merchants instead of one per merchant
  bool train_expert = false; ///< also fit the expert classifier after training
  double ridge_lambda = 1.0;
  std::size_t timing_iterations = 20; ///< per point of the scalability sweep
  bool ablate_baselines = true;       ///< add nearest-neighbor and ridge rows to ablations

  std::filesystem::path data_dir;
  std::filesystem::path checkpoint_dir;
  std::filesystem::path report_dir;

  /// Throws ConfigError.
  void validate() const;
  io::Json to_json() const;
};

/// Defaults with paths under `base`; data_dir honours MFP_DATA_ROOT.
RunConfig default_run_config(const std::filesystem::path& base);

/// Parses a JSON run config; relative paths resolve against `base`.
/// Unknown keys throw ConfigError.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base);
RunConfig load_run_config(const std::filesystem::path& path);

} // namespace mfp::cli
