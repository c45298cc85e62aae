#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "mfp/forecaster/expert.hpp"
#include "mfp/forecaster/model.hpp"
#include "mfp/nn/ops.hpp"

using namespace mfp;

namespace {

ModelConfig small(Variant v = Variant::full, std::size_t f = 3) {
  ModelConfig c;
  c.history = 32;
  c.horizon = 16;
  c.features = 3;
  c.futures = f;
  c.bank_size = 6;
  c.channels = 8;
  c.variant = v;
  return c;
}

// Closed-form parameter counts.
std::size_t conv_params(std::size_t in, std::size_t out, std::size_t k) { return out * in * k + out; }
std::size_t linear_params(std::size_t in, std::size_t out) { return out * in + out; }

std::size_t encoder_params(const ModelConfig& c) {
  std::size_t n = conv_params(c.features, c.channels, c.kernel);
  std::size_t blocks = 0;
  for (std::size_t h = c.history; h > 1; h /= 2) ++blocks;
  n += (blocks - 1) * conv_params(c.channels, c.channels, c.kernel);
  return n;
}

std::size_t shape_decoder_params(const ModelConfig& c) {
  const std::size_t regressor = linear_params(c.channels, c.features * c.bank_size);
  if (c.variant == Variant::tconv_decoder) {
    const std::size_t per_feature = linear_params(c.bank_size, c.channels) +
                                    kTConvBlocks * conv_params(c.channels, c.channels, 3) +
                                    conv_params(c.channels, 1, 3);
    return regressor + c.features * per_feature;
  }
  return regressor + c.features * c.bank_size * c.horizon;
}

std::size_t scale_decoder_params(const ModelConfig& c) {
  return linear_params(c.channels, 2 * c.features);
}

std::size_t expected_total(const ModelConfig& c) {
  const std::size_t enc = encoder_params(c), sd = shape_decoder_params(c),
                    sc = scale_decoder_params(c), f = c.futures;
  switch (c.variant) {
  case Variant::full:
  case Variant::one_loss:
  case Variant::tconv_decoder: return 2 * enc + f * (sd + sc);
  case Variant::shared_encoder: return enc + f * (sd + sc);
  case Variant::non_separated: return enc + f * sd;
  case Variant::model_ensemble: return f * (2 * enc + sd + sc);
  }
  return 0;
}

std::vector<Eigen::MatrixXd> random_windows(const ModelConfig& c, std::size_t n, SplitMix64& rng) {
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(testutil::random_matrix(static_cast<Eigen::Index>(c.history),
                                          static_cast<Eigen::Index>(c.features), rng, 0, 10));
  return out;
}

const Variant kAll[] = {Variant::full,          Variant::shared_encoder, Variant::non_separated,
                        Variant::one_loss,      Variant::tconv_decoder,  Variant::model_ensemble};

} // namespace

TEST_CASE("variant names round-trip") {
  for (Variant v : kAll) CHECK(parse_variant(to_string(v)) == v);
  CHECK_FALSE(parse_variant("bogus").has_value());
}

TEST_CASE("config validation") {
  ModelConfig c;
  CHECK_NOTHROW(c.validate());
  c.kernel = 4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ModelConfig{};
  c.futures = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ModelConfig{};
  c.variant = Variant::tconv_decoder;
  c.horizon = 8;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("encoder arithmetic for the default history") {
  ModelConfig c;
  CHECK(c.encoder_blocks() == 7);
  Forecaster<float> m(c, 1);
  CHECK(m.encoder_blocks() == 7);
  CHECK(m.encoder_lengths() == std::vector<std::size_t>{168, 84, 42, 21, 10, 5, 2, 1});
  SplitMix64 init(3), rng(2);
  Encoder<float> enc("e", c, init);
  auto h = enc.forward(testutil::random_tensor<float>({2, 4, 168}, rng, false));
  CHECK(h.shape() == nn::Shape{2, 64});
}

TEST_CASE("tconv decoder lengths") {
  ModelConfig c;
  c.variant = Variant::tconv_decoder;
  Forecaster<float> m(c, 1);
  CHECK(m.tconv_lengths() == std::vector<std::size_t>{1, 2, 4, 8, 16, 24});
  CHECK(Forecaster<float>(ModelConfig{}, 1).tconv_lengths().empty());
}

TEST_CASE("parameter counts match closed form") {
  for (Variant v : kAll) {
    for (std::size_t f : {1, 3, 12}) {
      ModelConfig c;
      c.variant = v;
      c.futures = f;
      Forecaster<float> m(c, 0);
      INFO(to_string(v), " f=", f);
      CHECK(m.count_parameters().total() == expected_total(c));
      std::size_t n = 0;
      for (const auto& p : m.parameters()) n += p.tensor.numel();
      CHECK(n == expected_total(c));
    }
  }
  ModelConfig c;
  CHECK(encoder_params(c) == 74944);
  CHECK(Forecaster<float>(c, 0).count_parameters().total() == 185624);
}

TEST_CASE("decoder parameters grow linearly in f") {
  for (Variant v : {Variant::full, Variant::model_ensemble}) {
    ModelConfig c;
    c.variant = v;
    std::vector<std::size_t> totals;
    for (std::size_t f = 1; f <= 5; ++f) {
      c.futures = f;
      totals.push_back(Forecaster<float>(c, 0).count_parameters().total());
    }
    for (std::size_t i = 2; i < totals.size(); ++i)
      CHECK(totals[i] - totals[i - 1] == totals[1] - totals[0]);
  }
}

TEST_CASE("parameter names are unique") {
  for (Variant v : kAll) {
    Forecaster<float> m(small(v), 0);
    std::set<std::string> names;
    for (const auto& p : m.parameters()) CHECK(names.insert(p.name).second);
  }
}

TEST_CASE("same seed gives identical parameters") {
  Forecaster<float> a(small(), 5), b(small(), 5), c(small(), 6);
  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  bool differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(testutil::values(pa[i].tensor) == testutil::values(pb[i].tensor));
    differs = differs || testutil::values(pa[i].tensor) != testutil::values(pc[i].tensor);
  }
  CHECK(differs);
}

TEST_CASE("future set structure and combine rule") {
  SplitMix64 rng(21);
  for (Variant v : kAll) {
    const auto c = small(v);
    Forecaster<double> m(c, 3);
    const auto fs = m.predict(random_windows(c, 1, rng).front());
    INFO(to_string(v));
    REQUIRE(fs.size() == c.futures);
    CHECK(fs.scale_mul.rows() == 3);
    CHECK(fs.scale_mul.cols() == 3);
    for (std::size_t i = 0; i < fs.size(); ++i) {
      CHECK(fs.futures[i].rows() == 3);
      CHECK(fs.futures[i].cols() == 16);
      for (Eigen::Index j = 0; j < 3; ++j) {
        const auto ii = static_cast<Eigen::Index>(i);
        const Eigen::RowVectorXd rebuilt =
            fs.scale_mul(ii, j) * fs.shape_preds[i].row(j).array() + fs.scale_add(ii, j);
        CHECK((rebuilt - fs.futures[i].row(j)).cwiseAbs().maxCoeff() < 1e-9);
        const auto& r = fs.activations[i][static_cast<std::size_t>(j)];
        CHECK(r.size() == 6);
        CHECK(std::abs(r.sum() - 1.0) < 1e-9);
        CHECK(r.minCoeff() > 0.0);
      }
    }
  }
}

TEST_CASE("non_separated shapes are standardized raw outputs") {
  SplitMix64 rng(22);
  const auto c = small(Variant::non_separated);
  Forecaster<double> m(c, 4);
  const auto fs = m.predict(random_windows(c, 1, rng).front());
  for (std::size_t i = 0; i < fs.size(); ++i)
    for (Eigen::Index j = 0; j < 3; ++j) {
      const auto row = fs.shape_preds[i].row(j);
      CHECK(std::abs(row.mean()) < 1e-9);
      CHECK(std::abs((row.array() - row.mean()).square().mean() - 1.0) < 1e-6);
    }
}

TEST_CASE("shape predictions stay inside the bank envelope") {
  SplitMix64 rng(23);
  for (Variant v : {Variant::full, Variant::shared_encoder, Variant::one_loss,
                    Variant::model_ensemble}) {
    const auto c = small(v);
    Forecaster<double> m(c, 8);
    for (const auto& w : random_windows(c, 5, rng)) {
      const auto fs = m.predict(w);
      for (std::size_t i = 0; i < fs.size(); ++i)
        for (std::size_t j = 0; j < 3; ++j) {
          const Eigen::MatrixXd bank = m.bank(i, j);
          const auto row = fs.shape_preds[i].row(static_cast<Eigen::Index>(j));
          for (Eigen::Index t = 0; t < row.size(); ++t) {
            CHECK(row(t) >= bank.col(t).minCoeff() - 1e-12);
            CHECK(row(t) <= bank.col(t).maxCoeff() + 1e-12);
          }
        }
    }
  }
  Forecaster<double> t(small(Variant::tconv_decoder), 1);
  CHECK_THROWS(t.bank(0, 0));
}

TEST_CASE("batched predict equals one-by-one") {
  SplitMix64 rng(24);
  const auto c = small();
  Forecaster<double> m(c, 9);
  const auto windows = random_windows(c, 4, rng);
  const auto batched = m.predict(std::span<const Eigen::MatrixXd>(windows));
  for (std::size_t b = 0; b < windows.size(); ++b) {
    const auto single = m.predict(windows[b]);
    for (std::size_t i = 0; i < c.futures; ++i)
      CHECK((single.futures[i] - batched[b].futures[i]).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("banks can be frozen") {
  Forecaster<float> m(small(), 1);
  m.set_banks_trainable(false);
  for (const auto& p : m.parameters()) {
    const bool is_bank = p.name.ends_with(".bank");
    CHECK(p.tensor.requires_grad() == !is_bank);
  }
}

TEST_CASE("expert classifier outputs a distribution over futures") {
  SplitMix64 rng(25);
  const auto c = small(Variant::full, 4);
  ExpertClassifier<double> e(c, 2);
  CHECK(e.futures() == 4);
  for (const auto& w : random_windows(c, 3, rng)) {
    const auto p = e.probabilities(w);
    CHECK(p.size() == 4);
    CHECK(std::abs(p.sum() - 1.0) < 1e-9);
  }
  ExpertClassifier<double> one(small(Variant::full, 1), 2);
  CHECK(one.probabilities(random_windows(c, 1, rng).front())(0) == doctest::Approx(1.0));
}
