#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mfp {

class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

enum class Variant {
  full,
  shared_encoder,
  non_separated,
  one_loss,
  tconv_decoder,
  model_ensemble,
};

std::string_view to_string(Variant v) noexcept;
std::optional<Variant> parse_variant(std::string_view name) noexcept;

struct ModelConfig {
  std::size_t history = 168;  ///< input horizon in hours
  std::size_t horizon = 24;   ///< output horizon in hours
  std::size_t features = 4;
  std::size_t futures = 3;
  std::size_t bank_size = 32; ///< shape templates per bank
  std::size_t channels = 64;
  std::size_t kernel = 3;
  Variant variant = Variant::full;
  /// Only used by non_separated, to split raw outputs into shape and scale.
  double znorm_epsilon = 1e-8;

  /// floor(log2(history)) Conv/ReLU/Pool blocks.
  std::size_t encoder_blocks() const noexcept;

  /// Throws ConfigError on an invalid combination.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

/// Number of TConv/ReLU/Upsample blocks in the transposed-convolution decoder.
inline constexpr std::size_t kTConvBlocks = 5;

} // namespace mfp
