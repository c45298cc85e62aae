#pragma once

#include <json.hpp>

#include "mfp/forecaster/config.hpp"

namespace mfp::io {

using Json = nlohmann::ordered_json;

Json model_config_to_json(const ModelConfig& config);
/// Unknown keys and wrong types throw ConfigError; missing keys keep defaults.
ModelConfig model_config_from_json(const Json& j);

} // namespace mfp::io
