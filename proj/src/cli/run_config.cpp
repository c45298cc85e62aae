#include "mfp/cli/run_config.hpp"

#include <cstdlib>

#include "mfp/data/csv.hpp"

namespace mfp::cli {

namespace {

using io::Json;

void expect_object(const Json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
}

std::size_t get_size(const Json& v, const std::string& key) {
  if (!v.is_number_unsigned()) throw ConfigError(key + " must be a non-negative integer");
  return v.get<std::size_t>();
}

std::uint64_t get_seed(const Json& v, const std::string& key) {
  if (!v.is_number_unsigned()) throw ConfigError(key + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

double get_real(const Json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key + " must be a number");
  return v.get<double>();
}

bool get_bool(const Json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError(key + " must be true or false");
  return v.get<bool>();
}

std::string get_string(const Json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError(key + " must be a string");
  return v.get<std::string>();
}

data::HourStamp get_time(const Json& v, const std::string& key) {
  try {
    return data::parse_timestamp(get_string(v, key));
  } catch (const data::DataError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

void parse_train(const Json& j, RunConfig& c) {
  expect_object(j, "train");
  for (const auto& [k, v] : j.items()) {
    const std::string key = "train." + k;
    if (k == "gamma") c.train.gamma = get_real(v, key);
    else if (k == "iterations") c.train.iterations = get_size(v, key);
    else if (k == "batch_size") c.train.batch_size = get_size(v, key);
    else if (k == "seed") c.train.seed = get_seed(v, key);
    else if (k == "learning_rate") c.train.learning_rate = get_real(v, key);
    else if (k == "znorm_epsilon") c.train.znorm_epsilon = get_real(v, key);
    else if (k == "pooled") c.pooled = get_bool(v, key);
    else if (k == "expert") c.train_expert = get_bool(v, key);
    else throw ConfigError("unknown key " + key);
  }
}

void parse_generator(const Json& j, RunConfig& c) {
  expect_object(j, "generator");
  auto& g = c.dataset.generator;
  for (const auto& [k, v] : j.items()) {
    const std::string key = "generator." + k;
    if (k == "merchants") c.dataset.merchants = get_size(v, key);
    else if (k == "merchant_prefix") c.dataset.prefix = get_string(v, key);
    else if (k == "n_hours") g.n_hours = get_size(v, key);
    else if (k == "seed") g.seed = get_seed(v, key);
    else if (k == "daily_amp") g.daily_amp = get_real(v, key);
    else if (k == "weekly_amp") g.weekly_amp = get_real(v, key);
    else if (k == "noise_std") g.noise_std = get_real(v, key);
    else if (k == "regime_switch_prob") g.regime_switch_prob = get_real(v, key);
    else if (k == "start") g.start_hour = get_time(v, key);
    else if (k == "base_levels") {
      if (!v.is_array() || v.size() != 4) throw ConfigError(key + " must be an array of 4 numbers");
      for (std::size_t i = 0; i < 4; ++i) g.base_levels[i] = get_real(v[i], key);
    } else if (k == "regimes") {
      if (!v.is_array() || v.empty()) throw ConfigError(key + " must be a non-empty array");
      g.regimes.clear();
      for (const auto& r : v) {
        expect_object(r, key + "[]");
        data::RegimeSpec spec;
        for (const auto& [rk, rv] : r.items()) {
          const std::string rkey = key + "[]." + rk;
          if (rk == "level") spec.level = get_real(rv, rkey);
          else if (rk == "daily_amplitude") spec.daily_amplitude = get_real(rv, rkey);
          else if (rk == "phase_hours") spec.phase_hours = get_real(rv, rkey);
          else throw ConfigError("unknown key " + rkey);
        }
        g.regimes.push_back(spec);
      }
    } else {
      throw ConfigError("unknown key " + key);
    }
  }
}

} // namespace

void RunConfig::validate() const {
  model.validate();
  train.validate();
  try {
    dataset.generator.validate();
  } catch (const data::DataError& e) {
    throw ConfigError(e.what());
  }
  if (dataset.merchants < 1) throw ConfigError("generator.merchants must be >= 1");
  if (dataset.prefix.empty()) throw ConfigError("generator.merchant_prefix must not be empty");
  if (!split.train_end && split.test_days < 1) throw ConfigError("split.test_days must be >= 1");
  if (!(ridge_lambda > 0.0)) throw ConfigError("eval.ridge_lambda must be > 0");
  if (timing_iterations < 1) throw ConfigError("ablate.timing_iterations must be >= 1");
  for (const auto* p : {&data_dir, &checkpoint_dir, &report_dir}) {
    if (p->empty()) throw ConfigError("paths must not be empty");
    if (std::filesystem::exists(*p) && !std::filesystem::is_directory(*p)) {
      throw ConfigError(p->string() + " exists and is not a directory");
    }
    const auto parent = p->parent_path();
    if (!parent.empty() && std::filesystem::exists(parent) &&
        !std::filesystem::is_directory(parent)) {
      throw ConfigError(p->string() + " cannot be resolved: " + parent.string() +
                        " is not a directory");
    }
  }
}

io::Json RunConfig::to_json() const {
  Json j;
  j["model"] = io::model_config_to_json(model);
  j["train"] = Json{{"gamma", train.gamma},
                    {"iterations", train.iterations},
                    {"batch_size", train.batch_size},
                    {"seed", train.seed},
                    {"learning_rate", train.learning_rate},
                    {"znorm_epsilon", train.znorm_epsilon},
                    {"pooled", pooled},
                    {"expert", train_expert}};
  const auto& g = dataset.generator;
  Json regimes = Json::array();
  for (const auto& r : g.regimes) {
    regimes.push_back(Json{{"level", r.level},
                           {"daily_amplitude", r.daily_amplitude},
                           {"phase_hours", r.phase_hours}});
  }
  j["generator"] = Json{{"merchants", dataset.merchants},
                        {"merchant_prefix", dataset.prefix},
                        {"n_hours", g.n_hours},
                        {"seed", g.seed},
                        {"daily_amp", g.daily_amp},
                        {"weekly_amp", g.weekly_amp},
                        {"noise_std", g.noise_std},
                        {"regime_switch_prob", g.regime_switch_prob},
                        {"start", data::format_timestamp(g.start_hour)},
                        {"base_levels", g.base_levels},
                        {"regimes", regimes}};
  j["split"] = Json{{"train_end", split.train_end ? Json(data::format_timestamp(*split.train_end))
                                                  : Json(nullptr)},
                    {"test_days", split.test_days}};
  j["eval"] = Json{{"ridge_lambda", ridge_lambda}};
  j["ablate"] = Json{{"timing_iterations", timing_iterations},
                     {"baselines", ablate_baselines}};
  j["paths"] = Json{{"data_dir", data_dir.string()},
                    {"checkpoint_dir", checkpoint_dir.string()},
                    {"report_dir", report_dir.string()}};
  return j;
}

RunConfig default_run_config(const std::filesystem::path& base) {
  RunConfig c;
  const char* root = std::getenv(kDataRootEnv);
  c.data_dir = (root && *root) ? resolve(base, root) : resolve(base, "data");
  c.checkpoint_dir = resolve(base, "checkpoints");
  c.report_dir = resolve(base, "reports");
  return c;
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("run config is not valid JSON: ") + e.what());
  }
  expect_object(j, "run config");
  RunConfig c = default_run_config(base);
  for (const auto& [k, v] : j.items()) {
    if (k == "model") {
      c.model = io::model_config_from_json(v);
    } else if (k == "train") {
      parse_train(v, c);
    } else if (k == "generator") {
      parse_generator(v, c);
    } else if (k == "split") {
      expect_object(v, "split");
      for (const auto& [sk, sv] : v.items()) {
        if (sk == "train_end") {
          if (sv.is_null()) c.split.train_end.reset();
          else c.split.train_end = get_time(sv, "split.train_end");
        } else if (sk == "test_days") {
          c.split.test_days = get_size(sv, "split.test_days");
        } else {
          throw ConfigError("unknown key split." + sk);
        }
      }
    } else if (k == "eval") {
      expect_object(v, "eval");
      for (const auto& [ek, ev] : v.items()) {
        if (ek == "ridge_lambda") c.ridge_lambda = get_real(ev, "eval.ridge_lambda");
        else throw ConfigError("unknown key eval." + ek);
      }
    } else if (k == "ablate") {
      expect_object(v, "ablate");
      for (const auto& [ak, av] : v.items()) {
        if (ak == "timing_iterations") c.timing_iterations = get_size(av, "ablate." + ak);
        else if (ak == "baselines") c.ablate_baselines = get_bool(av, "ablate." + ak);
        else throw ConfigError("unknown key ablate." + ak);
      }
    } else if (k == "paths") {
      expect_object(v, "paths");
      for (const auto& [pk, pv] : v.items()) {
        const auto p = resolve(base, get_string(pv, "paths." + pk));
        if (pk == "data_dir") c.data_dir = p;
        else if (pk == "checkpoint_dir") c.checkpoint_dir = p;
        else if (pk == "report_dir") c.report_dir = p;
        else throw ConfigError("unknown key paths." + pk);
      }
    } else {
      throw ConfigError("unknown key " + k);
    }
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = data::read_file(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  auto base = std::filesystem::absolute(path).parent_path();
  return parse_run_config(text, base);
}

} // namespace mfp::cli
