#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfp/forecaster/expert.hpp"
#include "mfp/forecaster/model.hpp"
#include "mfp/nn/adam.hpp"

namespace mfp::io {

class CheckpointError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kBlobFile = "params.bin";

struct ParamEntry {
  std::string name;
  nn::Shape shape;
  std::size_t offset = 0; ///< bytes into the blob
  std::size_t count = 0;  ///< elements
};

/// Contents of manifest.json. `kind` is "model", "expert_classifier" or
/// "shape_banks".
struct Manifest {
  int format_version = kFormatVersion;
  std::string kind;
  ModelConfig config;
  std::uint64_t seed = 0;
  std::string created;
  std::vector<ParamEntry> params;
  std::size_t blob_bytes = 0;
  std::uint32_t params_crc32 = 0; ///< over the canonical parameter table
  std::uint32_t blob_crc32 = 0;
};

/// Canonical "name:d0xd1:offset:count\n" lines the table checksum covers.
std::string parameter_table(const std::vector<ParamEntry>& params);

/// Reads and validates manifest.json (version, checksum of the table,
/// contiguous offsets) without touching the blob.
Manifest read_manifest(const std::filesystem::path& dir);

/// Writes manifest.json and params.bin (little-endian float32, manifest order).
/// `created` defaults to the current UTC time.
template <class T>
Manifest save_parameters(const std::filesystem::path& dir, const std::string& kind,
                         const ModelConfig& config, std::uint64_t seed,
                         const std::vector<nn::NamedTensor<T>>& params,
                         const std::string& created = {});

/// Validates the blob against the manifest and copies values into `params`,
/// which must match the manifest names and shapes one to one.
template <class T>
Manifest load_parameters(const std::filesystem::path& dir, const std::string& kind,
                         const std::vector<nn::NamedTensor<T>>& params);

template <class T>
Manifest save(const Forecaster<T>& model, const std::filesystem::path& dir, std::uint64_t seed,
              const std::string& created = {});
template <class T>
Forecaster<T> load(const std::filesystem::path& dir);

template <class T>
Manifest save_expert(const ExpertClassifier<T>& classifier, const std::filesystem::path& dir,
                     std::uint64_t seed, const std::string& created = {});
template <class T>
ExpertClassifier<T> load_expert(const std::filesystem::path& dir);

/// Shape banks only; load replaces the banks of `model` and nothing else.
template <class T>
Manifest save_banks(const Forecaster<T>& model, const std::filesystem::path& dir,
                    std::uint64_t seed, const std::string& created = {});
template <class T>
void load_banks(Forecaster<T>& model, const std::filesystem::path& dir);

} // namespace mfp::io
