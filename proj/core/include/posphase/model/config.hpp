#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace posphase::model {

using TokenId = std::int32_t;

enum class PeScheme { kLearnedApe, kSinusoidal, kRelative, kNone };
enum class AttentionMode { kCausal, kBidirectional };

std::string_view to_string(PeScheme scheme);
std::string_view to_string(AttentionMode mode);
// Throw ConfigError naming `key` on an unknown value.
PeScheme parse_pe_scheme(std::string_view text, const std::string& key = "pe_scheme");
AttentionMode parse_attention_mode(std::string_view text,
                                   const std::string& key = "attention_mode");

// Whether logits depend only on position differences.
constexpr bool is_shift_invariant(PeScheme scheme) {
  return scheme == PeScheme::kRelative || scheme == PeScheme::kNone;
}

struct ModelConfig {
  std::size_t d_model = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t context_window = 256;
  std::size_t vocab_size = 0;
  PeScheme pe_scheme = PeScheme::kLearnedApe;
  AttentionMode attention_mode = AttentionMode::kCausal;
  std::int32_t rel_max_distance = 16;
  std::size_t mlp_mult = 4;

  // Throws ConfigError on the first violated constraint.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

}  // namespace posphase::model
