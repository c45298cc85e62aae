#include "mfp/io/json_config.hpp"

#include <string>

namespace mfp::io {

Json model_config_to_json(const ModelConfig& c) {
  Json j;
  j["history"] = c.history;
  j["horizon"] = c.horizon;
  j["features"] = c.features;
  j["futures"] = c.futures;
  j["bank_size"] = c.bank_size;
  j["channels"] = c.channels;
  j["kernel"] = c.kernel;
  j["variant"] = std::string(to_string(c.variant));
  j["znorm_epsilon"] = c.znorm_epsilon;
  return j;
}

ModelConfig model_config_from_json(const Json& j) {
  if (!j.is_object()) {
    throw ConfigError("model config must be a JSON object");
  }
  ModelConfig c;
  auto size = [](const Json& v, const std::string& key) {
    if (!v.is_number_unsigned()) {
      throw ConfigError("model." + key + " must be a non-negative integer");
    }
    return v.get<std::size_t>();
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "history") c.history = size(v, key);
    else if (key == "horizon") c.horizon = size(v, key);
    else if (key == "features") c.features = size(v, key);
    else if (key == "futures") c.futures = size(v, key);
    else if (key == "bank_size") c.bank_size = size(v, key);
    else if (key == "channels") c.channels = size(v, key);
    else if (key == "kernel") c.kernel = size(v, key);
    else if (key == "variant") {
      if (!v.is_string()) throw ConfigError("model.variant must be a string");
      const auto parsed = parse_variant(v.get<std::string>());
      if (!parsed) throw ConfigError("unknown variant '" + v.get<std::string>() + "'");
      c.variant = *parsed;
    } else if (key == "znorm_epsilon") {
      if (!v.is_number()) throw ConfigError("model.znorm_epsilon must be a number");
      c.znorm_epsilon = v.get<double>();
    } else {
      throw ConfigError("unknown key model." + key);
    }
  }
  return c;
}

} // namespace mfp::io
