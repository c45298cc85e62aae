#include "mfp/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>

#include "mfp/data/csv.hpp"
#include "mfp/eval/compare.hpp"
#include "mfp/eval/evaluate.hpp"
#include "mfp/io/checkpoint.hpp"

namespace mfp::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("cannot create directory " + dir.string() +
                             (ec ? ": " + ec.message() : ""));
  }
}

void write_text(const fs::path& path, const std::string& text) {
  data::write_file_atomic(path, text);
}

void echo_config(const RunConfig& config, const fs::path& dir) {
  write_text(dir / "run_config.json", config.to_json().dump(2) + "\n");
}

std::string model_id(const ModelConfig& m) {
  return "mfp_" + std::string(to_string(m.variant)) + "_f" + std::to_string(m.futures);
}

double mean_tail(const std::vector<LossRecord>& trace, std::size_t n, bool head) {
  if (trace.empty()) return 0.0;
  n = std::min(n, trace.size());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += trace[head ? i : trace.size() - n + i].total_loss;
  }
  return s / static_cast<double>(n);
}

struct TrainUnit {
  std::string name;
  std::vector<data::MultivariateSeries> train;
  std::vector<std::size_t> members; ///< dataset indices this unit serves
};

/// One unit per merchant, or a single pooled unit.
std::vector<TrainUnit> training_units(const std::vector<data::MultivariateSeries>& dataset,
                                      const RunConfig& config) {
  std::vector<TrainUnit> units;
  if (config.pooled) {
    TrainUnit u{"pooled", {}, {}};
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      u.train.push_back(split_series(dataset[i], config).train);
      u.members.push_back(i);
    }
    units.push_back(std::move(u));
  } else {
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      units.push_back({dataset[i].merchant_id, {split_series(dataset[i], config).train}, {i}});
    }
  }
  return units;
}

void write_report(const eval::EvalReport& r, const fs::path& dir) {
  ensure_dir(dir);
  write_text(dir / (r.dataset + ".json"), r.to_json());
  write_text(dir / (r.dataset + ".csv"), r.to_csv());
  write_text(dir / (r.dataset + "_predictions.csv"), r.predictions_csv());
}

std::vector<std::size_t> top_k(const Eigen::VectorXd& v, std::size_t k) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return v(static_cast<Eigen::Index>(a)) > v(static_cast<Eigen::Index>(b));
  });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

} // namespace

RunConfig resolve_config(const std::optional<fs::path>& config_path, const Overrides& o) {
  RunConfig c = config_path ? load_run_config(*config_path) : default_run_config(fs::current_path());
  if (o.seed) {
    c.train.seed = *o.seed;
    c.dataset.generator.seed = *o.seed;
  }
  if (o.futures) c.model.futures = *o.futures;
  if (o.variant) c.model.variant = *o.variant;
  if (o.iterations) c.train.iterations = *o.iterations;
  c.validate();
  return c;
}

std::optional<Baseline> parse_baseline(const std::string& name) noexcept {
  if (name == "nn" || name == "nearest_neighbor") return Baseline::nearest_neighbor;
  if (name == "ridge") return Baseline::ridge;
  return std::nullopt;
}

std::vector<data::MultivariateSeries> load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw data::DataError("data directory " + dir.string() + " does not exist");
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw data::DataError("no .csv files in " + dir.string());
  }
  std::vector<data::MultivariateSeries> out;
  for (const auto& f : files) {
    try {
      out.push_back(data::load_csv(f));
    } catch (const data::DataError& e) {
      throw data::DataError(f.string() + ": " + e.what());
    }
  }
  return out;
}

data::Split split_series(const data::MultivariateSeries& series, const RunConfig& config) {
  const data::HourStamp cut =
      config.split.train_end
          ? *config.split.train_end
          : series.end_hour() - static_cast<data::HourStamp>(24 * config.split.test_days);
  try {
    return data::split_by_date(series, cut, config.model.history);
  } catch (const data::DataError& e) {
    throw data::DataError(series.merchant_id + ": " + e.what());
  }
}

void cmd_generate(const RunConfig& config, const fs::path& out_dir, std::ostream& log) {
  ensure_dir(out_dir);
  Json merchants = Json::array();
  for (std::size_t i = 0; i < config.dataset.merchants; ++i) {
    data::GeneratorConfig g = config.dataset.generator;
    g.seed = derive_seed(config.dataset.generator.seed, i);
    char id[64];
    std::snprintf(id, sizeof id, "%s-%03zu", config.dataset.prefix.c_str(), i);
    g.merchant_id = id;
    const auto s = data::generate(g);
    const std::string file = g.merchant_id + ".csv";
    data::save_csv(s, out_dir / file);
    merchants.push_back(Json{{"id", g.merchant_id}, {"file", file}, {"seed", g.seed},
                             {"hours", s.length()}});
    log << "wrote " << (out_dir / file).string() << " (" << s.length() << " hours)\n";
  }
  Json manifest;
  manifest["synthetic"] = true;
  manifest["dataset_seed"] = config.dataset.generator.seed;
  manifest["generator"] = config.to_json()["generator"];
  manifest["merchants"] = merchants;
  write_text(out_dir / "dataset.json", manifest.dump(2) + "\n");
  echo_config(config, out_dir);
}

void cmd_train(const RunConfig& config, const fs::path& out_dir, std::ostream& log) {
  const auto dataset = load_dataset(config.data_dir);
  ensure_dir(out_dir);
  echo_config(config, out_dir);
  for (const auto& unit : training_units(dataset, config)) {
    log << "training " << unit.name << " (" << to_string(config.model.variant)
        << ", f=" << config.model.futures << ", " << config.train.iterations << " iterations)\n";
    auto result = train<float>(unit.train, config.model, config.train);
    const fs::path dir = out_dir / unit.name;
    io::save(result.model, dir, config.train.seed);
    write_text(dir / "loss_trace.csv", format_trace_csv(result.trace));
    const auto count = result.model.count_parameters();
    Json summary;
    summary["unit"] = unit.name;
    summary["variant"] = std::string(to_string(config.model.variant));
    summary["futures"] = config.model.futures;
    summary["seed"] = config.train.seed;
    summary["iterations"] = config.train.iterations;
    summary["gamma"] = effective_gamma(config.model, config.train);
    summary["final_loss"] = result.trace.empty() ? 0.0 : result.trace.back().total_loss;
    summary["first50_mean_loss"] = mean_tail(result.trace, 50, true);
    summary["last50_mean_loss"] = mean_tail(result.trace, 50, false);
    summary["parameter_count"] = count.total();
    summary["encoder_parameters"] = count.encoder;
    summary["decoder_parameters"] = count.decoder;
    summary["wall_seconds"] = result.seconds;
    if (config.train_expert) {
      const auto expert = train_expert<float>(unit.train, result.model, config.train);
      io::save_expert(expert.classifier, dir / "expert", config.train.seed);
      summary["expert_final_loss"] =
          expert.loss_trace.empty() ? 0.0 : expert.loss_trace.back();
    }
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    log << "  final loss " << summary["final_loss"].get<double>() << ", "
        << count.total() << " parameters, " << result.seconds << " s\n";
  }
}

void cmd_evaluate(const RunConfig& config, const fs::path& checkpoint_dir,
                  std::optional<Baseline> baseline, const fs::path& out_dir, std::ostream& log) {
  const auto dataset = load_dataset(config.data_dir);
  const std::size_t np = config.model.history, nh = config.model.horizon;
  std::vector<eval::EvalReport> reports;
  for (const auto& series : dataset) {
    const auto split = split_series(series, config);
    eval::EvalReport report;
    if (baseline == Baseline::nearest_neighbor) {
      eval::NearestNeighborPredictor p(eval::NearestNeighbor(split.train, np, nh));
      report = eval::evaluate_rolling(p, split.test, np, nh, config.train.znorm_epsilon);
    } else if (baseline == Baseline::ridge) {
      eval::RidgePredictor p(eval::fit_ridge(split.train, np, nh, config.ridge_lambda));
      report = eval::evaluate_rolling(p, split.test, np, nh, config.train.znorm_epsilon);
    } else {
      fs::path dir = checkpoint_dir / series.merchant_id;
      if (!fs::exists(dir / io::kManifestFile)) dir = checkpoint_dir / "pooled";
      if (!fs::exists(dir / io::kManifestFile)) dir = checkpoint_dir;
      const auto model = io::load<float>(dir);
      const auto& mc = model.config();
      if (mc.history != np || mc.horizon != nh || mc.features != series.features()) {
        throw ConfigError("checkpoint " + dir.string() + " expects history " +
                          std::to_string(mc.history) + ", horizon " + std::to_string(mc.horizon) +
                          ", " + std::to_string(mc.features) + " features; the run config has " +
                          std::to_string(np) + ", " + std::to_string(nh) + ", " +
                          std::to_string(series.features()));
      }
      if (mc.futures != config.model.futures || mc.variant != config.model.variant) {
        throw ConfigError("checkpoint " + dir.string() + " holds " + model_id(mc) +
                          ", the run config asks for " + model_id(config.model));
      }
      eval::ForecasterPredictor<float> p(model, model_id(mc));
      report = eval::evaluate_rolling(p, split.test, np, nh, config.train.znorm_epsilon);
    }
    log << report.model_id << " on " << report.dataset << ": oracle rmse " << report.oracle_rmse
        << ", oracle nrmse " << report.oracle_nrmse << " over " << report.per_window.size()
        << " windows\n";
    reports.push_back(std::move(report));
  }
  const fs::path dir = out_dir / reports.front().model_id;
  for (const auto& r : reports) write_report(r, dir);
  const auto table = eval::compare(reports);
  write_text(dir / "summary.csv", table.to_csv());
  echo_config(config, dir);
}

void cmd_predict(const fs::path& checkpoint_dir, const fs::path& csv_path,
                 const std::optional<fs::path>& expert_dir, const fs::path& out_dir,
                 std::ostream& log) {
  const auto model = io::load<float>(checkpoint_dir);
  const auto& mc = model.config();
  const auto series = data::load_csv(csv_path);
  if (series.length() < mc.history) {
    throw data::DataError(csv_path.string() + " has " + std::to_string(series.length()) +
                          " hours, the model needs " + std::to_string(mc.history));
  }
  if (series.features() != mc.features) {
    throw data::DataError(csv_path.string() + " has " + std::to_string(series.features()) +
                          " features, the model expects " + std::to_string(mc.features));
  }
  const std::size_t start = series.length() - mc.history;
  const auto window = series.window(start, mc.history);
  const auto fs_ = model.predict(window);
  ensure_dir(out_dir);

  char buf[160];
  std::string futures = "future,feature,hour,timestamp,value,shape,scale_mul,scale_add\n";
  for (std::size_t i = 0; i < fs_.size(); ++i) {
    for (std::size_t j = 0; j < mc.features; ++j) {
      const auto ji = static_cast<Eigen::Index>(j);
      const auto ii = static_cast<Eigen::Index>(i);
      for (std::size_t t = 0; t < mc.horizon; ++t) {
        const auto ti = static_cast<Eigen::Index>(t);
        std::snprintf(buf, sizeof buf, "%zu,%s,%zu,%s,%.9g,%.9g,%.9g,%.9g\n", i + 1,
                      series.feature_names[j].c_str(), t,
                      data::format_timestamp(series.end_hour() + ti).c_str(),
                      fs_.futures[i](ji, ti), fs_.shape_preds[i](ji, ti), fs_.scale_mul(ii, ji),
                      fs_.scale_add(ii, ji));
        futures += buf;
      }
    }
  }
  data::write_file_atomic(out_dir / "futures.csv", futures);

  std::string act = "future,feature,top1,top2,top3";
  for (std::size_t s = 0; s < mc.bank_size; ++s) act += ",r" + std::to_string(s);
  act += '\n';
  for (std::size_t i = 0; i < fs_.size(); ++i) {
    for (std::size_t j = 0; j < mc.features; ++j) {
      const auto& r = fs_.activations[i][j];
      act += std::to_string(i + 1) + "," + series.feature_names[j];
      const auto top = top_k(r, 3);
      for (std::size_t k = 0; k < 3; ++k) {
        act += k < top.size() ? "," + std::to_string(top[k]) : std::string(",");
      }
      for (Eigen::Index s = 0; s < r.size(); ++s) {
        std::snprintf(buf, sizeof buf, ",%.9g", r(s));
        act += buf;
      }
      act += '\n';
    }
  }
  data::write_file_atomic(out_dir / "activations.csv", act);

  if (expert_dir) {
    const auto expert = io::load_expert<float>(*expert_dir);
    if (expert.config().history != mc.history || expert.futures() != mc.futures) {
      throw ConfigError("expert checkpoint does not match the model (history or futures)");
    }
    const auto p = expert.probabilities(window);
    std::string text = "future,probability\n";
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%ld,%.9g\n", static_cast<long>(i + 1), p(i));
      text += buf;
    }
    data::write_file_atomic(out_dir / "expert.csv", text);
  }
  log << "predicted " << fs_.size() << " futures of " << mc.horizon << " hours after "
      << data::format_timestamp(series.end_hour() - 1) << " into " << out_dir.string() << "\n";
}

void cmd_ablate(const RunConfig& config, bool scalability, const fs::path& out_dir,
                std::ostream& log) {
  const auto dataset = load_dataset(config.data_dir);
  ensure_dir(out_dir);
  echo_config(config, out_dir);
  const std::size_t np = config.model.history, nh = config.model.horizon;

  if (scalability) {
    const auto train_part = split_series(dataset.front(), config).train;
    std::string csv = "scheme,futures,parameters,encoder_parameters,decoder_parameters,"
                      "seconds_per_iteration\n";
    char buf[192];
    for (const Variant v : {Variant::full, Variant::model_ensemble}) {
      for (const std::size_t f : {1, 3, 12}) {
        ModelConfig mc = config.model;
        mc.variant = v;
        mc.futures = f;
        TrainConfig tc = config.train;
        tc.iterations = config.timing_iterations;
        const auto r = train<float>(train_part, mc, tc);
        const auto count = r.model.count_parameters();
        const double per_it = r.seconds / static_cast<double>(tc.iterations);
        std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%zu,%zu,%.6g\n",
                      std::string(to_string(v)).c_str(), f, count.total(), count.encoder,
                      count.decoder, per_it);
        csv += buf;
        log << to_string(v) << " f=" << f << ": " << count.total() << " parameters, " << per_it
            << " s/iteration\n";
      }
    }
    write_text(out_dir / "scalability.csv", csv);
    return;
  }

  std::vector<eval::EvalReport> reports;
  for (const Variant v : {Variant::full, Variant::non_separated, Variant::shared_encoder,
                          Variant::one_loss, Variant::tconv_decoder}) {
    RunConfig rc = config;
    rc.model.variant = v;
    for (const auto& unit : training_units(dataset, rc)) {
      log << "ablation " << to_string(v) << " on " << unit.name << "\n";
      const auto result = train<float>(unit.train, rc.model, rc.train);
      eval::ForecasterPredictor<float> p(result.model, std::string(to_string(v)));
      for (std::size_t m : unit.members) {
        const auto split = split_series(dataset[m], rc);
        reports.push_back(eval::evaluate_rolling(p, split.test, np, nh, rc.train.znorm_epsilon));
      }
    }
  }
  if (config.ablate_baselines) {
    for (const auto& series : dataset) {
      const auto split = split_series(series, config);
      eval::NearestNeighborPredictor nnp(eval::NearestNeighbor(split.train, np, nh));
      reports.push_back(eval::evaluate_rolling(nnp, split.test, np, nh, config.train.znorm_epsilon));
      eval::RidgePredictor rp(eval::fit_ridge(split.train, np, nh, config.ridge_lambda));
      reports.push_back(eval::evaluate_rolling(rp, split.test, np, nh, config.train.znorm_epsilon));
    }
  }
  for (const auto& r : reports) write_report(r, out_dir / r.model_id);
  const auto table = eval::compare(reports);
  write_text(out_dir / "ablation.csv", table.to_csv());
  write_text(out_dir / "ablation.txt", table.to_text());
  log << table.to_text();
}

} // namespace mfp::cli
