#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "mfp/data/csv.hpp"
#include "mfp/data/generator.hpp"
#include "mfp/io/checkpoint.hpp"
#include "mfp/io/json_config.hpp"

using namespace mfp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Bitwise reflected CRC-32 (polynomial 0xEDB88320).
std::uint32_t ref_crc32(const std::string& bytes) {
  std::uint32_t c = 0xFFFFFFFFu;
  for (unsigned char b : bytes) {
    c ^= b;
    for (int k = 0; k < 8; ++k) c = (c >> 1) ^ (0xEDB88320u & (0u - (c & 1u)));
  }
  return c ^ 0xFFFFFFFFu;
}

std::string slurp(const fs::path& p) { return data::read_file(p); }

void spit(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary | std::ios::trunc) << s;
}

std::vector<Eigen::MatrixXd> inputs(std::size_t n) {
  data::GeneratorConfig g;
  const auto s = data::generate(g);
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(s.window(i * 37, 168));
  return out;
}

ModelConfig small_config(std::size_t f = 2) {
  ModelConfig c;
  c.futures = f;
  return c;
}

} // namespace

TEST_CASE("save, load, save is byte-identical and the blob is float32") {
  TempDir a("mfp_io_a"), b("mfp_io_b");
  const Forecaster<float> model(small_config(), 7);
  const auto m = io::save(model, a.path, 7, "2020-01-01T00:00:00Z");
  const auto loaded = io::load<float>(a.path);
  io::save(loaded, b.path, 7, "2020-01-01T00:00:00Z");
  CHECK(slurp(a.path / io::kBlobFile) == slurp(b.path / io::kBlobFile));
  CHECK(slurp(a.path / io::kManifestFile) == slurp(b.path / io::kManifestFile));

  const auto blob = slurp(a.path / io::kBlobFile);
  const std::size_t n = model.count_parameters().total();
  CHECK(blob.size() == 4 * n);
  CHECK(m.blob_bytes == 4 * n);
  std::size_t count = 0;
  for (const auto& p : m.params) count += p.count;
  CHECK(count == n);
  CHECK(m.blob_crc32 == ref_crc32(blob));
  const auto table = io::parameter_table(m.params);
  CHECK(m.params_crc32 == ref_crc32(table));

  // Little-endian float32 in manifest order.
  const auto params = model.parameters();
  std::size_t off = 0;
  for (const auto& p : params) {
    for (float v : p.tensor.data()) {
      const auto* q = reinterpret_cast<const unsigned char*>(blob.data() + off);
      const std::uint32_t bits = q[0] | (q[1] << 8) | (q[2] << 16) |
                                 (static_cast<std::uint32_t>(q[3]) << 24);
      float f;
      std::memcpy(&f, &bits, 4);
      REQUIRE(f == v);
      off += 4;
    }
  }

  const auto j = io::Json::parse(slurp(a.path / io::kManifestFile));
  CHECK(j["format_version"] == 1);
  CHECK(j["kind"] == "model");
  CHECK(j["variant"] == "full");
  CHECK(j["created"] == "2020-01-01T00:00:00Z");
  CHECK(j["seed"] == 7);
}

TEST_CASE("round trip preserves predictions") {
  TempDir dir("mfp_io_pred");
  const Forecaster<float> model(small_config(3), 3);
  io::save(model, dir.path, 3);
  const auto loaded = io::load<float>(dir.path);
  CHECK(loaded.config() == model.config());
  for (const auto& x : inputs(10)) {
    const auto p = model.predict(x), q = loaded.predict(x);
    for (std::size_t i = 0; i < 3; ++i) CHECK(p.futures[i] == q.futures[i]);
  }
  // Double models are stored as float32 and reload to the rounded values.
  const Forecaster<double> dm(small_config(1), 4);
  io::save(dm, dir.path, 4);
  const auto dl = io::load<double>(dir.path);
  const auto pa = dm.parameters(), pb = dl.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i)
    for (std::size_t k = 0; k < pa[i].tensor.numel(); ++k)
      REQUIRE(pb[i].tensor.data()[k] ==
              static_cast<double>(static_cast<float>(pa[i].tensor.data()[k])));
}

TEST_CASE("corruption is detected") {
  TempDir dir("mfp_io_bad");
  const Forecaster<float> model(small_config(), 1);
  io::save(model, dir.path, 1);
  const auto manifest = slurp(dir.path / io::kManifestFile);
  const auto blob = slurp(dir.path / io::kBlobFile);

  SUBCASE("truncated blob") {
    spit(dir.path / io::kBlobFile, blob.substr(0, blob.size() - 8));
    try {
      io::load<float>(dir.path);
      FAIL("no error");
    } catch (const io::CheckpointError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("expected " + std::to_string(blob.size()) + " bytes") != std::string::npos);
      CHECK(msg.find("found " + std::to_string(blob.size() - 8)) != std::string::npos);
    }
  }
  SUBCASE("flipped blob byte") {
    auto bad = blob;
    bad[100] = static_cast<char>(bad[100] ^ 0x01);
    spit(dir.path / io::kBlobFile, bad);
    CHECK_THROWS_AS(io::load<float>(dir.path), io::CheckpointError);
  }
  SUBCASE("version mismatch") {
    auto j = io::Json::parse(manifest);
    j["format_version"] = 2;
    spit(dir.path / io::kManifestFile, j.dump(2));
    CHECK_THROWS_WITH_AS(io::load<float>(dir.path), doctest::Contains("format_version 2"),
                         io::CheckpointError);
  }
  SUBCASE("shape field edits") {
    auto j = io::Json::parse(manifest);
    for (std::size_t i : {0u, 5u}) {
      auto k = j;
      auto& dim = k["params"][i]["shape"][0];
      dim = dim.get<std::size_t>() + 1;
      spit(dir.path / io::kManifestFile, k.dump(2));
      CHECK_THROWS_AS(io::read_manifest(dir.path), io::CheckpointError);
    }
    auto k = j;
    k["params"][1]["offset"] = k["params"][1]["offset"].get<std::size_t>() + 4;
    spit(dir.path / io::kManifestFile, k.dump(2));
    CHECK_THROWS_AS(io::read_manifest(dir.path), io::CheckpointError);
  }
  SUBCASE("single-byte manifest digit corruption") {
    // Change one digit inside a shape array.
    const auto at = manifest.find("\"shape\": [");
    REQUIRE(at != std::string::npos);
    auto pos = manifest.find_first_of("0123456789", at);
    auto bad = manifest;
    bad[pos] = bad[pos] == '9' ? '8' : static_cast<char>(bad[pos] + 1);
    spit(dir.path / io::kManifestFile, bad);
    CHECK_THROWS_AS(io::load<float>(dir.path), io::CheckpointError);
  }
  SUBCASE("architecture mismatch") {
    const Forecaster<float> other(small_config(3), 1);
    CHECK_THROWS_AS(io::load_parameters(dir.path, "model", other.parameters()),
                    io::CheckpointError);
  }
  SUBCASE("wrong kind") {
    CHECK_THROWS_AS(io::load_expert<float>(dir.path), io::CheckpointError);
  }
  SUBCASE("missing files") {
    fs::remove(dir.path / io::kBlobFile);
    CHECK_THROWS_AS(io::load<float>(dir.path), io::CheckpointError);
    fs::remove(dir.path / io::kManifestFile);
    CHECK_THROWS_AS(io::load<float>(dir.path), io::CheckpointError);
  }
}

TEST_CASE("bank-only checkpoints replace only the banks") {
  TempDir dir("mfp_io_banks");
  const Forecaster<float> source(small_config(), 11);
  Forecaster<float> target(small_config(), 12);
  io::save_banks(source, dir.path, 11);
  const auto before = target.parameters();
  std::vector<std::vector<float>> saved;
  for (const auto& p : before) saved.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  io::load_banks(target, dir.path);
  const auto after = target.parameters(), src = source.parameters();
  std::size_t banks = 0;
  for (std::size_t i = 0; i < after.size(); ++i) {
    const std::vector<float> now(after[i].tensor.data().begin(), after[i].tensor.data().end());
    const bool is_bank = after[i].name.ends_with(".bank");
    banks += is_bank;
    if (is_bank) {
      CHECK(now == std::vector<float>(src[i].tensor.data().begin(), src[i].tensor.data().end()));
    } else {
      CHECK(now == saved[i]);
    }
  }
  CHECK(banks == 2);
  CHECK(io::read_manifest(dir.path).kind == "shape_banks");

  ModelConfig tc = small_config();
  tc.variant = Variant::tconv_decoder;
  const Forecaster<float> tconv(tc, 1);
  CHECK_THROWS_AS(io::save_banks(tconv, dir.path, 1), io::CheckpointError);
}

TEST_CASE("expert classifier round trip") {
  TempDir dir("mfp_io_expert");
  const ExpertClassifier<float> c(small_config(3), 5);
  io::save_expert(c, dir.path, 5);
  const auto back = io::load_expert<float>(dir.path);
  for (const auto& x : inputs(4)) CHECK(c.probabilities(x) == back.probabilities(x));
  CHECK_THROWS_AS(io::load<float>(dir.path), io::CheckpointError);
}

TEST_CASE("model config json") {
  ModelConfig c;
  c.futures = 12;
  c.variant = Variant::non_separated;
  c.bank_size = 16;
  const auto j = io::model_config_to_json(c);
  CHECK(io::model_config_from_json(j) == c);
  CHECK(io::model_config_from_json(io::Json::object()) == ModelConfig{});
  auto bad = j;
  bad["unknown_key"] = 1;
  CHECK_THROWS_AS(io::model_config_from_json(bad), ConfigError);
  bad = j;
  bad["variant"] = "bogus";
  CHECK_THROWS_AS(io::model_config_from_json(bad), ConfigError);
  bad = j;
  bad["futures"] = "three";
  CHECK_THROWS_AS(io::model_config_from_json(bad), ConfigError);
}
