#include "mfp/forecaster/config.hpp"

#include <array>
#include <bit>
#include <utility>

namespace mfp {

namespace {
constexpr std::array<std::pair<Variant, std::string_view>, 6> kVariantNames{{
    {Variant::full, "full"},
    {Variant::shared_encoder, "shared_encoder"},
    {Variant::non_separated, "non_separated"},
    {Variant::one_loss, "one_loss"},
    {Variant::tconv_decoder, "tconv_decoder"},
    {Variant::model_ensemble, "model_ensemble"},
}};
} // namespace

std::string_view to_string(Variant v) noexcept {
  for (const auto& [k, name] : kVariantNames) {
    if (k == v) {
      return name;
    }
  }
  return "unknown";
}

std::optional<Variant> parse_variant(std::string_view name) noexcept {
  for (const auto& [k, n] : kVariantNames) {
    if (n == name) {
      return k;
    }
  }
  return std::nullopt;
}

std::size_t ModelConfig::encoder_blocks() const noexcept {
  return history == 0 ? 0 : static_cast<std::size_t>(std::bit_width(history) - 1);
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("model config: " + msg); };
  if (history < 2) fail("history must be >= 2");
  if (horizon < 1) fail("horizon must be >= 1");
  if (features < 1) fail("features must be >= 1");
  if (futures < 1) fail("futures must be >= 1");
  if (bank_size < 1) fail("bank_size must be >= 1");
  if (channels < 1) fail("channels must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) fail("kernel must be odd");
  if (!(znorm_epsilon > 0.0)) fail("znorm_epsilon must be > 0");
  if (variant == Variant::tconv_decoder && horizon < (std::size_t{1} << (kTConvBlocks - 1))) {
    fail("tconv_decoder needs horizon >= " +
         std::to_string(std::size_t{1} << (kTConvBlocks - 1)));
  }
}

} // namespace mfp
