#include "mfp/io/checkpoint.hpp"

#include <bit>
#include <chrono>
#include <cstring>
#include <ctime>

#include <zlib.h>

#include "mfp/data/csv.hpp"
#include "mfp/io/json_config.hpp"

namespace mfp::io {

namespace {

std::uint32_t crc(const void* data, std::size_t n) {
  uLong c = crc32(0L, Z_NULL, 0);
  const auto* p = static_cast<const Bytef*>(data);
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    c = crc32(c, p, chunk);
    p += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = (v >> 24) | ((v >> 8) & 0xFF00u) | ((v << 8) & 0xFF0000u) | (v << 24);
  }
  return v;
}

std::string encode_blob(const std::vector<float>& values) {
  std::string out(values.size() * 4, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint32_t le = to_le(std::bit_cast<std::uint32_t>(values[i]));
    std::memcpy(out.data() + 4 * i, &le, 4);
  }
  return out;
}

float decode_float(const char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return std::bit_cast<float>(to_le(v));
}

void check_model_kind(const Manifest& m, const std::string& kind,
                      const std::filesystem::path& dir) {
  if (m.kind != kind) {
    throw CheckpointError(dir.string() + " holds a '" + m.kind + "' checkpoint, expected '" +
                          kind + "'");
  }
}

template <class T>
std::vector<nn::NamedTensor<T>> banks_of(const Forecaster<T>& model) {
  std::vector<nn::NamedTensor<T>> out;
  for (auto& p : model.parameters()) {
    if (p.name.size() >= 5 && p.name.compare(p.name.size() - 5, 5, ".bank") == 0) {
      out.push_back(p);
    }
  }
  if (out.empty()) {
    throw CheckpointError("model variant '" + std::string(to_string(model.config().variant)) +
                          "' has no shape banks");
  }
  return out;
}

} // namespace

std::string parameter_table(const std::vector<ParamEntry>& params) {
  std::string out;
  for (const auto& p : params) {
    out += p.name + ":";
    for (std::size_t i = 0; i < p.shape.size(); ++i) {
      if (i) out += "x";
      out += std::to_string(p.shape[i]);
    }
    out += ":" + std::to_string(p.offset) + ":" + std::to_string(p.count) + "\n";
  }
  return out;
}

Manifest read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / kManifestFile;
  if (!std::filesystem::exists(path)) {
    throw CheckpointError("missing " + path.string());
  }
  Manifest m;
  try {
    const Json j = Json::parse(data::read_file(path));
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kFormatVersion) {
      throw CheckpointError("unsupported checkpoint format_version " +
                            std::to_string(m.format_version) + " (this build reads " +
                            std::to_string(kFormatVersion) + ")");
    }
    m.kind = j.at("kind").get<std::string>();
    m.config = model_config_from_json(j.at("config"));
    m.seed = j.at("seed").get<std::uint64_t>();
    m.created = j.at("created").get<std::string>();
    m.blob_bytes = j.at("blob_bytes").get<std::size_t>();
    m.params_crc32 = j.at("params_crc32").get<std::uint32_t>();
    m.blob_crc32 = j.at("blob_crc32").get<std::uint32_t>();
    for (const auto& e : j.at("params")) {
      ParamEntry p;
      p.name = e.at("name").get<std::string>();
      p.shape = e.at("shape").get<nn::Shape>();
      p.offset = e.at("offset").get<std::size_t>();
      p.count = e.at("count").get<std::size_t>();
      m.params.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("malformed " + path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError("malformed config in " + path.string() + ": " + e.what());
  }
  const std::string table = parameter_table(m.params);
  if (crc(table.data(), table.size()) != m.params_crc32) {
    throw CheckpointError(path.string() + ": parameter table checksum mismatch");
  }
  std::size_t offset = 0;
  for (const auto& p : m.params) {
    if (p.offset != offset || p.count != nn::numel(p.shape)) {
      throw CheckpointError(path.string() + ": parameter '" + p.name +
                            "' has inconsistent offset or count");
    }
    offset += 4 * p.count;
  }
  if (offset != m.blob_bytes) {
    throw CheckpointError(path.string() + ": blob_bytes " + std::to_string(m.blob_bytes) +
                          " does not match the parameter table (" + std::to_string(offset) + ")");
  }
  return m;
}

template <class T>
Manifest save_parameters(const std::filesystem::path& dir, const std::string& kind,
                         const ModelConfig& config, std::uint64_t seed,
                         const std::vector<nn::NamedTensor<T>>& params,
                         const std::string& created) {
  Manifest m;
  m.kind = kind;
  m.config = config;
  m.seed = seed;
  m.created = created.empty() ? utc_now() : created;
  std::vector<float> values;
  for (const auto& p : params) {
    ParamEntry e{p.name, p.tensor.shape(), 4 * values.size(), p.tensor.numel()};
    for (T v : p.tensor.data()) values.push_back(static_cast<float>(v));
    m.params.push_back(std::move(e));
  }
  const std::string blob = encode_blob(values);
  const std::string table = parameter_table(m.params);
  m.blob_bytes = blob.size();
  m.params_crc32 = crc(table.data(), table.size());
  m.blob_crc32 = crc(blob.data(), blob.size());

  Json j;
  j["format_version"] = m.format_version;
  j["kind"] = m.kind;
  j["variant"] = std::string(to_string(config.variant));
  j["config"] = model_config_to_json(config);
  j["seed"] = m.seed;
  j["created"] = m.created;
  j["dtype"] = "float32-le";
  j["blob"] = kBlobFile;
  j["blob_bytes"] = m.blob_bytes;
  j["blob_crc32"] = m.blob_crc32;
  j["params_crc32"] = m.params_crc32;
  auto& arr = j["params"] = Json::array();
  for (const auto& p : m.params) {
    arr.push_back(Json{{"name", p.name}, {"shape", p.shape}, {"offset", p.offset},
                       {"count", p.count}});
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw CheckpointError("cannot create " + dir.string() + ": " + ec.message());
  }
  try {
    data::write_file_atomic(dir / kBlobFile, blob);
    data::write_file_atomic(dir / kManifestFile, j.dump(2) + "\n");
  } catch (const std::runtime_error& e) {
    throw CheckpointError(e.what());
  }
  return m;
}

template <class T>
Manifest load_parameters(const std::filesystem::path& dir, const std::string& kind,
                         const std::vector<nn::NamedTensor<T>>& params) {
  const Manifest m = read_manifest(dir);
  check_model_kind(m, kind, dir);
  if (m.params.size() != params.size()) {
    throw CheckpointError(dir.string() + ": manifest lists " + std::to_string(m.params.size()) +
                          " tensors, the model has " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = m.params[i];
    if (e.name != params[i].name || e.shape != params[i].tensor.shape()) {
      throw CheckpointError(dir.string() + ": tensor " + std::to_string(i) + " is '" + e.name +
                            "' " + nn::to_string(e.shape) + ", expected '" + params[i].name +
                            "' " + nn::to_string(params[i].tensor.shape()));
    }
  }
  const auto blob_path = dir / kBlobFile;
  if (!std::filesystem::exists(blob_path)) {
    throw CheckpointError("missing " + blob_path.string());
  }
  const std::string blob = data::read_file(blob_path);
  if (blob.size() != m.blob_bytes) {
    throw CheckpointError(blob_path.string() + ": expected " + std::to_string(m.blob_bytes) +
                          " bytes, found " + std::to_string(blob.size()));
  }
  if (crc(blob.data(), blob.size()) != m.blob_crc32) {
    throw CheckpointError(blob_path.string() + ": checksum mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto t = params[i].tensor;
    auto out = t.data();
    const char* p = blob.data() + m.params[i].offset;
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k] = static_cast<T>(decode_float(p + 4 * k));
    }
  }
  return m;
}

template <class T>
Manifest save(const Forecaster<T>& model, const std::filesystem::path& dir, std::uint64_t seed,
              const std::string& created) {
  return save_parameters(dir, "model", model.config(), seed, model.parameters(), created);
}

template <class T>
Forecaster<T> load(const std::filesystem::path& dir) {
  const Manifest m = read_manifest(dir);
  check_model_kind(m, "model", dir);
  try {
    m.config.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(dir.string() + ": " + e.what());
  }
  Forecaster<T> model(m.config, 0);
  load_parameters(dir, "model", model.parameters());
  return model;
}

template <class T>
Manifest save_expert(const ExpertClassifier<T>& classifier, const std::filesystem::path& dir,
                     std::uint64_t seed, const std::string& created) {
  return save_parameters(dir, "expert_classifier", classifier.config(), seed,
                         classifier.parameters(), created);
}

template <class T>
ExpertClassifier<T> load_expert(const std::filesystem::path& dir) {
  const Manifest m = read_manifest(dir);
  check_model_kind(m, "expert_classifier", dir);
  ExpertClassifier<T> c(m.config, 0);
  load_parameters(dir, "expert_classifier", c.parameters());
  return c;
}

template <class T>
Manifest save_banks(const Forecaster<T>& model, const std::filesystem::path& dir,
                    std::uint64_t seed, const std::string& created) {
  return save_parameters(dir, "shape_banks", model.config(), seed, banks_of(model), created);
}

template <class T>
void load_banks(Forecaster<T>& model, const std::filesystem::path& dir) {
  load_parameters(dir, "shape_banks", banks_of(model));
}

#define MFP_INSTANTIATE_IO(T)                                                                    \
  template Manifest save_parameters(const std::filesystem::path&, const std::string&,            \
                                    const ModelConfig&, std::uint64_t,                           \
                                    const std::vector<nn::NamedTensor<T>>&, const std::string&); \
  template Manifest load_parameters(const std::filesystem::path&, const std::string&,            \
                                    const std::vector<nn::NamedTensor<T>>&);                     \
  template Manifest save(const Forecaster<T>&, const std::filesystem::path&, std::uint64_t,      \
                         const std::string&);                                                    \
  template Forecaster<T> load(const std::filesystem::path&);                                     \
  template Manifest save_expert(const ExpertClassifier<T>&, const std::filesystem::path&,        \
                                std::uint64_t, const std::string&);                              \
  template ExpertClassifier<T> load_expert(const std::filesystem::path&);                        \
  template Manifest save_banks(const Forecaster<T>&, const std::filesystem::path&, std::uint64_t, \
                               const std::string&);                                              \
  template void load_banks(Forecaster<T>&, const std::filesystem::path&);

MFP_INSTANTIATE_IO(float)
MFP_INSTANTIATE_IO(double)

} // namespace mfp::io
