#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "mfp/data/csv.hpp"
#include "mfp/data/generator.hpp"

using namespace mfp::data;

namespace {

const char* kHeader = "timestamp,approved_count,unique_cards,amount_sum,approval_rate\n";

std::string three_rows() {
  return std::string(kHeader) +
         "2018-11-01T00:00:00Z,10,8,25.5,0.95\n"
         "2018-11-01T01:00:00Z,12,9,30,0.9\n"
         "2018-11-01T02:00:00Z,0,0,0,1\n";
}

std::string error_of(const std::string& text) {
  try {
    parse_csv(text, "m");
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

} // namespace

TEST_CASE("timestamps") {
  const HourStamp h = parse_timestamp("2018-11-01T00:00:00Z");
  CHECK(h == 17836 * 24);
  CHECK(format_timestamp(h + 13) == "2018-11-01T13:00:00Z");
  CHECK(parse_timestamp("2018-11-01 13:00:00") == h + 13);
  CHECK(parse_timestamp("2018-11-01") == h);
  CHECK(weekday(h) == 4); // Thursday
  CHECK(weekday(0) == 4);
  CHECK(hour_of_day(h + 13) == 13);
  CHECK(format_timestamp(-1) == "1969-12-31T23:00:00Z");
  CHECK_THROWS_AS(parse_timestamp("2018-11-01T00:30:00Z"), DataError);
  CHECK_THROWS_AS(parse_timestamp("2018-02-30"), DataError);
  CHECK_THROWS_AS(parse_timestamp("yesterday"), DataError);
}

TEST_CASE("generator determinism and validity") {
  GeneratorConfig g;
  const auto a = generate_with_regimes(g);
  const auto b = generate_with_regimes(g);
  CHECK(a.series.values == b.series.values);
  CHECK(a.day_regimes == b.day_regimes);
  CHECK(a.series.length() == 720);
  CHECK(a.series.features() == 4);
  CHECK(a.series.feature_names == merchant_features());
  CHECK(a.day_regimes.size() == 30);
  CHECK_NOTHROW(a.series.validate());
  for (Eigen::Index t = 0; t < a.series.values.rows(); ++t)
    CHECK(a.series.values(t, 1) <= a.series.values(t, 0));
  g.seed = 1;
  CHECK(generate(g).values != a.series.values);
}

TEST_CASE("noise-free single regime is weekly periodic") {
  GeneratorConfig g;
  g.noise_std = 0.0;
  g.regimes = {{1.0, 1.0, 0.0}};
  g.n_hours = 24 * 21;
  const auto s = generate(g);
  CHECK((s.values.topRows(336) - s.values.bottomRows(336)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((s.values.topRows(24) - s.values.middleRows(24, 24)).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("regime switching frequency") {
  GeneratorConfig g;
  g.n_hours = 24 * 2000;
  const auto r = generate_with_regimes(g);
  std::size_t switches = 0;
  for (std::size_t d = 1; d < r.day_regimes.size(); ++d)
    switches += r.day_regimes[d] != r.day_regimes[d - 1];
  const double rate = static_cast<double>(switches) / (r.day_regimes.size() - 1);
  CHECK(rate == doctest::Approx(0.5).epsilon(0.08));
  g.regime_switch_prob = 0.0;
  for (auto d : generate_with_regimes(g).day_regimes) CHECK(d == 0);
  g.regime_switch_prob = 1.0;
  g.n_hours = 24 * 6;
  CHECK(generate_with_regimes(g).day_regimes == std::vector<std::size_t>{0, 1, 0, 1, 0, 1});
}

TEST_CASE("continuations share the history and have a bimodal next day") {
  GeneratorConfig g;
  g.n_hours = 24 * 9;
  const std::size_t fork = 8;
  const auto base = generate(g);
  std::vector<double> means;
  for (std::uint64_t k = 0; k < 200; ++k) {
    const auto c = generate_continuation(g, fork, 1000 + k).series;
    REQUIRE(c.values.topRows(24 * fork) == base.values.topRows(24 * fork));
    means.push_back(c.values.col(0).tail(24).mean());
  }
  // Two-cluster split at the widest gap of the sorted means.
  std::sort(means.begin(), means.end());
  std::size_t cut = 1;
  for (std::size_t i = 1; i < means.size(); ++i)
    if (means[i] - means[i - 1] > means[cut] - means[cut - 1]) cut = i;
  auto spread = [](auto b, auto e) {
    const double m = std::accumulate(b, e, 0.0) / static_cast<double>(e - b);
    double v = 0;
    for (auto it = b; it != e; ++it) v += (*it - m) * (*it - m);
    return std::sqrt(v / static_cast<double>(e - b));
  };
  const double gap = means[cut] - means[cut - 1];
  CHECK(cut >= 40);
  CHECK(means.size() - cut >= 40);
  CHECK(gap > 3.0 * spread(means.begin(), means.begin() + static_cast<long>(cut)));
  CHECK(gap > 3.0 * spread(means.begin() + static_cast<long>(cut), means.end()));
}

TEST_CASE("generator config validation") {
  GeneratorConfig g;
  g.regime_switch_prob = 1.5;
  CHECK_THROWS_AS(generate(g), DataError);
  g = GeneratorConfig{};
  g.daily_amp = -1;
  CHECK_THROWS_AS(generate(g), DataError);
  g = GeneratorConfig{};
  g.n_hours = 0;
  CHECK_THROWS_AS(generate(g), DataError);
  g = GeneratorConfig{};
  g.regimes.clear();
  CHECK_THROWS_AS(generate(g), DataError);
}

TEST_CASE("series validation") {
  auto s = parse_csv(three_rows(), "m");
  CHECK(s.length() == 3);
  CHECK(s.merchant_id == "m");
  CHECK(s.start_hour == parse_timestamp("2018-11-01"));
  auto bad = s;
  bad.values(0, 3) = 1.2;
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = s;
  bad.values(1, 0) = -1;
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = s;
  bad.values(2, 2) = NAN;
  CHECK_THROWS_AS(bad.validate(), DataError);
}

TEST_CASE("csv rejects malformed input with row numbers") {
  const std::string h(kHeader);
  CHECK(error_of(h + "2018-11-01T00:00:00Z,1,1,1,1\n2018-11-01T00:00:00Z,1,1,1,1\n")
            .find("row 3: duplicate") != std::string::npos);
  CHECK(error_of(h + "2018-11-01T00:00:00Z,1,1,1,1\n2018-11-01T03:00:00Z,1,1,1,1\n")
            .find("row 3: missing hour") != std::string::npos);
  CHECK(error_of(h + "2018-11-01T05:00:00Z,1,1,1,1\n2018-11-01T02:00:00Z,1,1,1,1\n")
            .find("row 3: timestamp") != std::string::npos);
  CHECK(error_of(h + "2018-11-01T00:00:00Z,1,x,1,1\n").find("row 2: non-numeric") !=
        std::string::npos);
  CHECK(error_of(h + "2018-11-01T00:00:00Z,1,1,1\n").find("row 2: expected 5 fields") !=
        std::string::npos);
  CHECK(error_of("time,a,b,c,d\n").find("row 1") != std::string::npos);
  CHECK(error_of(h + "2018-11-01T00:00:00Z,1,1,1,1.5\n").find("approval_rate") !=
        std::string::npos);
}

TEST_CASE("csv round trip") {
  GeneratorConfig g;
  g.n_hours = 100;
  const auto s = generate(g);
  const auto dir = std::filesystem::temp_directory_path() / "mfp_test_data";
  std::filesystem::create_directories(dir);
  const auto path = dir / "merchant-7.csv";
  save_csv(s, path);
  const auto back = load_csv(path);
  CHECK(back.values == s.values);
  CHECK(back.start_hour == s.start_hour);
  CHECK(back.merchant_id == "merchant-7");
  CHECK(format_csv(back) == format_csv(s));
  CHECK_FALSE(std::filesystem::exists(dir / "merchant-7.csv.tmp"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("split_by_date") {
  const auto s = generate(GeneratorConfig{});
  const HourStamp day23 = s.start_hour + 23 * 24;
  const auto sp = split_by_date(s, day23, 168);
  CHECK(sp.train.length() == 23 * 24);
  CHECK(sp.test_hours() == 7 * 24);
  CHECK(sp.test.length() == 7 * 24 + 168);
  CHECK(sp.test.start_hour == day23 - 168);
  Eigen::MatrixXd joined(s.length(), 4);
  joined << sp.train.values, sp.test.values.bottomRows(static_cast<Eigen::Index>(sp.test_hours()));
  CHECK(joined == s.values);

  const auto end = split_by_date(s, s.end_hour(), 0);
  CHECK(end.test.length() == 0);
  CHECK(end.train.length() == s.length());
  CHECK_THROWS_AS(split_by_date(s, s.start_hour, 0), DataError);
  CHECK_THROWS_AS(split_by_date(s, s.end_hour() + 1, 0), DataError);
  CHECK_THROWS_AS(split_by_date(s, s.start_hour + 10, 168), DataError);
}
