#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "mfp/data/generator.hpp"
#include "mfp/nn/grad_check.hpp"
#include "mfp/training/train.hpp"

using namespace mfp;

namespace {

// Independent nrmse: every row z-normalized with a two-pass population std.
double nrmse_oracle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& truth) {
  long double sse = 0;
  for (Eigen::Index j = 0; j < truth.rows(); ++j) {
    long double mean = 0;
    for (Eigen::Index t = 0; t < truth.cols(); ++t) mean += truth(j, t);
    mean /= truth.cols();
    long double var = 0;
    for (Eigen::Index t = 0; t < truth.cols(); ++t) var += (truth(j, t) - mean) * (truth(j, t) - mean);
    const long double sd = std::max(std::sqrt(var / truth.cols()), 1e-8L);
    for (Eigen::Index t = 0; t < truth.cols(); ++t) {
      const long double e = a(j, t) - (truth(j, t) - mean) / sd;
      sse += e * e;
    }
  }
  return static_cast<double>(std::sqrt(sse / truth.size()));
}

FutureSet random_future_set(std::size_t f, Eigen::Index d, Eigen::Index h, SplitMix64& rng) {
  FutureSet fs;
  fs.scale_mul = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(f), d);
  fs.scale_add = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(f), d);
  for (std::size_t i = 0; i < f; ++i) {
    fs.shape_preds.push_back(testutil::random_matrix(d, h, rng, -2, 2));
    fs.futures.push_back(testutil::random_matrix(d, h, rng, -5, 5));
  }
  return fs;
}

data::MultivariateSeries ramp_series(std::size_t n, std::size_t d) {
  data::MultivariateSeries s;
  s.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index t = 0; t < s.values.rows(); ++t)
    for (Eigen::Index j = 0; j < s.values.cols(); ++j) s.values(t, j) = 100.0 * j + t;
  for (std::size_t j = 0; j < d; ++j) s.feature_names.push_back("f" + std::to_string(j));
  return s;
}

ModelConfig small_model(std::size_t f = 3, Variant v = Variant::full) {
  ModelConfig c;
  c.history = 48;
  c.horizon = 24;
  c.futures = f;
  c.bank_size = 8;
  c.channels = 16;
  c.variant = v;
  return c;
}

} // namespace

TEST_CASE("z_normalize examples") {
  Eigen::MatrixXd x(3, 1);
  x << 1, 2, 3;
  const auto z = z_normalize(x);
  CHECK(z(0, 0) == doctest::Approx(-1.2247).epsilon(1e-3));
  CHECK(z(1, 0) == doctest::Approx(0.0));
  CHECK(z(2, 0) == doctest::Approx(1.2247).epsilon(1e-3));
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(3, 2, 5.0);
  CHECK(z_normalize(c).cwiseAbs().maxCoeff() == 0.0);
  SplitMix64 rng(1);
  const auto once = z_normalize(testutil::random_matrix(20, 3, rng));
  CHECK((z_normalize(once) - once).cwiseAbs().maxCoeff() < 1e-6);
  CHECK_THROWS(z_normalize(Eigen::MatrixXd(0, 2)));
}

TEST_CASE("rmse examples") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2), b(2, 2);
  CHECK(rmse(a, a) == 0.0);
  CHECK(rmse(a, Eigen::MatrixXd::Ones(2, 2)) == 1.0);
  b << 3, 0, 0, 4;
  CHECK(rmse(a, b) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK_THROWS_AS(rmse(a, Eigen::MatrixXd::Zero(2, 3)), MetricError);
}

TEST_CASE("nrmse examples") {
  Eigen::MatrixXd truth(1, 3);
  truth << 1, 2, 3;
  CHECK(nrmse(z_normalize_rows(truth), truth) == doctest::Approx(0.0));
  CHECK(nrmse(Eigen::MatrixXd::Zero(1, 3), truth) == doctest::Approx(1.0).epsilon(1e-12));
  SplitMix64 rng(2);
  const auto a = testutil::random_matrix(4, 24, rng);
  const auto t = testutil::random_matrix(4, 24, rng, 0, 50);
  CHECK(nrmse(a, 3.5 * t.array() + 7.0) == doctest::Approx(nrmse(a, t)).epsilon(1e-12));
  CHECK(std::abs(nrmse(a, t) - nrmse_oracle(a, t)) < 1e-12);
}

TEST_CASE("oracle_index examples and exhaustive agreement") {
  SplitMix64 rng(3);
  const auto truth = testutil::random_matrix(4, 24, rng, 0, 10);
  auto one = random_future_set(1, 4, 24, rng);
  CHECK(oracle_index(one, truth) == 0);
  auto fs = random_future_set(4, 4, 24, rng);
  fs.shape_preds[2] = z_normalize_rows(truth);
  CHECK(oracle_index(fs, truth) == 2);
  // Duplicate best entries resolve to the lowest index.
  fs.shape_preds[3] = fs.shape_preds[2];
  CHECK(oracle_index(fs, truth) == 2);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t f = 1 + rng.index(16);
    const auto set = random_future_set(f, 4, 24, rng);
    const auto t = testutil::random_matrix(4, 24, rng, 0, 10);
    std::size_t best = 0;
    for (std::size_t i = 1; i < f; ++i)
      if (nrmse_oracle(set.shape_preds[i], t) < nrmse_oracle(set.shape_preds[best], t)) best = i;
    CHECK(oracle_index(set, t) == best);
  }
}

TEST_CASE("compute_loss examples") {
  SplitMix64 rng(4);
  const auto truth = testutil::random_matrix(2, 24, rng, 0, 10);
  FutureSet perfect;
  perfect.futures = {truth};
  perfect.shape_preds = {z_normalize_rows(truth)};
  const auto r0 = compute_loss(perfect, truth, 0, 1.0);
  CHECK(r0.total_loss == doctest::Approx(0.0));
  auto fs = random_future_set(3, 2, 24, rng);
  const auto i = oracle_index(fs, truth);
  const auto g0 = compute_loss(fs, truth, i, 0.0);
  CHECK(g0.total_loss == g0.rmse_term);
  const auto g1 = compute_loss(fs, truth, i, 1.0);
  CHECK(std::abs(g1.total_loss - (g1.rmse_term + g1.nrmse_term)) < 1e-12);
  CHECK(g1.oracle_histogram[i] == 1);
  CHECK_THROWS_AS(compute_loss(fs, truth, 3, 1.0), MetricError);
}

TEST_CASE("oracle minimum over a superset never increases") {
  SplitMix64 rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const auto fs = random_future_set(8, 3, 24, rng);
    const auto t = testutil::random_matrix(3, 24, rng);
    double prev = INFINITY;
    for (std::size_t k = 1; k <= 8; ++k) {
      std::vector<Eigen::MatrixXd> sub(fs.shape_preds.begin(), fs.shape_preds.begin() + k);
      const double m = nrmse(sub[oracle_index(sub, t)], t);
      CHECK(m <= prev);
      prev = m;
    }
  }
}

TEST_CASE("sample_minibatch contract") {
  const auto s = ramp_series(30, 2);
  SplitMix64 rng(6);
  const std::vector<data::MultivariateSeries> one{s};
  const auto exact = sample_minibatch(one, 20, 10, 5, rng);
  for (const auto& o : exact.origins) CHECK(o.start == 0);

  const auto longer = ramp_series(200, 3);
  const std::vector<data::MultivariateSeries> set{longer};
  SplitMix64 a(7), b(7);
  const auto b1 = sample_minibatch(set, 24, 12, 64, a);
  const auto b2 = sample_minibatch(set, 24, 12, 64, b);
  CHECK(b1.size() == 64);
  for (std::size_t k = 0; k < b1.size(); ++k) {
    CHECK(b1.origins[k].start == b2.origins[k].start);
    const auto st = static_cast<Eigen::Index>(b1.origins[k].start);
    CHECK(b1.inputs[k] == longer.values.middleRows(st, 24));
    CHECK(b1.targets[k] == longer.values.middleRows(st + 24, 12));
    CHECK(b1.origins[k].start + 36 <= 200);
  }
  CHECK_THROWS_AS(sample_minibatch(one, 25, 10, 1, rng), data::DataError);
}

TEST_CASE("sample_minibatch draws from every series") {
  const std::vector<data::MultivariateSeries> set{ramp_series(40, 1), ramp_series(40, 1),
                                                  ramp_series(10, 1)};
  SplitMix64 rng(8);
  const auto b = sample_minibatch(set, 10, 5, 400, rng);
  std::vector<int> seen(3, 0);
  for (const auto& o : b.origins) ++seen[o.series];
  CHECK(seen[0] > 0);
  CHECK(seen[1] > 0);
  CHECK(seen[2] == 0);
}

TEST_CASE("train config defaults and validation") {
  TrainConfig t;
  CHECK(t.gamma == 1.0);
  CHECK(t.iterations == 2000);
  CHECK(t.batch_size == 64);
  CHECK(t.learning_rate == 1e-3);
  CHECK(t.znorm_epsilon == 1e-8);
  t.znorm_epsilon = 0.0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  CHECK(effective_gamma(small_model(3, Variant::one_loss), TrainConfig{}) == 0.0);
  CHECK(effective_gamma(small_model(3, Variant::full), TrainConfig{}) == 1.0);
}

TEST_CASE("zero iterations returns the initialized model") {
  data::GeneratorConfig g;
  const auto s = data::generate(g);
  TrainConfig tc;
  tc.iterations = 0;
  const auto r = train<float>(s, small_model(), tc);
  CHECK(r.trace.empty());
  const Forecaster<float> fresh(small_model(), derive_seed(tc.seed, seed_stream::model_init));
  const auto a = r.model.parameters(), b = fresh.parameters();
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(testutil::values(a[i].tensor) == testutil::values(b[i].tensor));
}

TEST_CASE("training is deterministic and records consistent losses") {
  data::GeneratorConfig g;
  const auto s = data::generate(g);
  TrainConfig tc;
  tc.iterations = 15;
  tc.batch_size = 16;
  const auto a = train<float>(s, small_model(), tc);
  const auto b = train<float>(s, small_model(), tc);
  REQUIRE(a.trace.size() == 15);
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    const auto& r = a.trace[i];
    CHECK(r.iteration == i);
    CHECK(r.total_loss == b.trace[i].total_loss);
    CHECK(r.rmse_term == b.trace[i].rmse_term);
    CHECK(std::abs(r.total_loss - (r.rmse_term + r.nrmse_term)) < 1e-6);
    CHECK(std::accumulate(r.oracle_histogram.begin(), r.oracle_histogram.end(), 0u) == 16u);
  }
  tc.seed = 1;
  const auto c = train<float>(s, small_model(), tc);
  CHECK(c.trace.front().total_loss != a.trace.front().total_loss);
}

TEST_CASE("one_loss drops the nrmse term") {
  const auto s = data::generate(data::GeneratorConfig{});
  TrainConfig tc;
  tc.iterations = 3;
  tc.batch_size = 8;
  const auto r = train<float>(s, small_model(3, Variant::one_loss), tc);
  for (const auto& rec : r.trace) {
    CHECK(rec.total_loss == rec.rmse_term);
    CHECK(rec.nrmse_term > 0.0);
  }
}

TEST_CASE("batch oracle agrees with per-window oracle_index") {
  const auto s = data::generate(data::GeneratorConfig{});
  const auto mc = small_model(4);
  Forecaster<double> m(mc, 3);
  SplitMix64 rng(9);
  const std::vector<data::MultivariateSeries> set{s};
  const auto batch = sample_minibatch(set, mc.history, mc.horizon, 12, rng);
  const auto labels = oracle_labels(m, batch, 1e-8);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto fs = m.predict(batch.inputs[b]);
    CHECK(labels[b] == oracle_index(fs, batch.targets[b].transpose()));
  }
  const auto loss = oracle_batch_loss(m.forward(windows_to_tensor<double>(batch.inputs)), batch,
                                      1.0, 1e-8);
  CHECK(loss.oracle == labels);
  double sum = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto fs = m.predict(batch.inputs[b]);
    sum += compute_loss(fs, batch.targets[b].transpose(), labels[b], 1.0).total_loss;
  }
  CHECK(loss.loss.item() == doctest::Approx(sum).epsilon(1e-10));
}

TEST_CASE("oracle loss gradient passes finite differences") {
  const auto s = data::generate(data::GeneratorConfig{});
  ModelConfig mc;
  mc.history = 16;
  mc.horizon = 8;
  mc.features = 4;
  mc.futures = 2;
  mc.bank_size = 4;
  mc.channels = 4;
  Forecaster<double> m(mc, 5);
  SplitMix64 rng(10);
  const std::vector<data::MultivariateSeries> set{s};
  const auto batch = sample_minibatch(set, mc.history, mc.horizon, 3, rng);
  const auto input = windows_to_tensor<double>(batch.inputs);
  std::vector<nn::Tensor<double>> params;
  for (const auto& p : m.parameters()) params.push_back(p.tensor);
  nn::LossClosure f = [&](const std::vector<nn::Tensor<double>>&) {
    return oracle_batch_loss(m.forward(input), batch, 1.0, 1e-8).loss;
  };
  const auto r = nn::grad_check(f, params);
  CHECK(r.checked > 0);
  CHECK(r.max_relative_error < 1e-3);
}

TEST_CASE("loss trace CSV") {
  LossRecord r{3, 1.5, 1.0, 0.5, {2, 0, 6}};
  const auto csv = format_trace_csv({r});
  CHECK(csv == "iteration,total,rmse,nrmse,oracle_histogram\n3,1.5,1,0.5,2;0;6\n");
}

TEST_CASE("training on the bimodal generator halves the loss") {
  data::GeneratorConfig g;
  const auto s = data::generate(g);
  TrainConfig tc;
  tc.iterations = 500;
  const auto r = train<float>(s, ModelConfig{}, tc);
  double first = 0, last = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    first += r.trace[i].total_loss;
    last += r.trace[r.trace.size() - 50 + i].total_loss;
  }
  CHECK(last < 0.5 * first);
}

TEST_CASE("expert classifier with one future is trivial") {
  const auto s = data::generate(data::GeneratorConfig{});
  Forecaster<float> m(small_model(1), 1);
  TrainConfig tc;
  tc.iterations = 5;
  const std::vector<data::MultivariateSeries> set{s};
  const auto e = train_expert<float>(set, m, tc);
  CHECK(e.loss_trace.empty());
  CHECK(e.classifier.futures() == 1);
}

TEST_CASE("expert labels lie in range") {
  const auto s = data::generate(data::GeneratorConfig{});
  const auto mc = small_model(3);
  Forecaster<float> m(mc, 1);
  SplitMix64 rng(11);
  const std::vector<data::MultivariateSeries> set{s};
  const auto batch = sample_minibatch(set, mc.history, mc.horizon, 50, rng);
  for (auto l : oracle_labels(m, batch, 1e-8)) CHECK(l < 3);
  TrainConfig tc;
  tc.iterations = 4;
  tc.batch_size = 8;
  const auto e = train_expert<float>(set, m, tc);
  CHECK(e.loss_trace.size() == 4);
  for (double v : e.loss_trace) CHECK(std::isfinite(v));
}

TEST_CASE("expert classifier predicts the oracle future on persistent regimes") {
  // Regimes persist across days with probability 0.8, so the input's last
  // day tells which regime, and hence which future, is likely next.
  data::GeneratorConfig g;
  g.n_hours = 24 * 60;
  g.regime_switch_prob = 0.2;
  const auto s = data::generate(g);
  g.seed = 100;
  const auto held = data::generate(g);
  ModelConfig mc;
  mc.futures = 2;
  TrainConfig tc;
  tc.iterations = 600;
  const auto r = train<float>(s, mc, tc);
  TrainConfig te = tc;
  te.iterations = 300;
  const std::vector<data::MultivariateSeries> set{s}, hs{held};
  const auto e = train_expert<float>(set, r.model, te);
  SplitMix64 rng(5);
  const auto b = sample_minibatch(hs, mc.history, mc.horizon, 400, rng);
  const auto labels = oracle_labels(r.model, b, 1e-8);
  const double ones = static_cast<double>(std::count(labels.begin(), labels.end(), 1u)) / 400.0;
  const double acc = expert_accuracy(e.classifier, r.model, b, 1e-8);
  CHECK(acc > 0.6);
  CHECK(acc > std::max(ones, 1.0 - ones));
}
