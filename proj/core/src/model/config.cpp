#include "posphase/model/config.hpp"

#include "posphase/errors.hpp"

namespace posphase::model {

std::string_view to_string(PeScheme scheme) {
  switch (scheme) {
    case PeScheme::kLearnedApe: return "learned_ape";
    case PeScheme::kSinusoidal: return "sinusoidal";
    case PeScheme::kRelative: return "relative";
    case PeScheme::kNone: return "none";
  }
  return "unknown";
}

std::string_view to_string(AttentionMode mode) {
  return mode == AttentionMode::kCausal ? "causal" : "bidirectional";
}

PeScheme parse_pe_scheme(std::string_view text, const std::string& key) {
  for (auto s : {PeScheme::kLearnedApe, PeScheme::kSinusoidal, PeScheme::kRelative,
                 PeScheme::kNone}) {
    if (text == to_string(s)) return s;
  }
  throw ConfigError(key, "unknown positional scheme '" + std::string(text) +
                             "' (expected learned_ape, sinusoidal, relative or none)");
}

AttentionMode parse_attention_mode(std::string_view text, const std::string& key) {
  if (text == "causal") return AttentionMode::kCausal;
  if (text == "bidirectional") return AttentionMode::kBidirectional;
  throw ConfigError(key, "unknown attention mode '" + std::string(text) +
                             "' (expected causal or bidirectional)");
}

void ModelConfig::validate() const {
  if (d_model == 0) throw ConfigError("d_model", "must be positive");
  if (n_layers == 0) throw ConfigError("n_layers", "must be positive");
  if (n_heads == 0 || d_model % n_heads != 0) {
    throw ConfigError("n_heads", "d_model must be divisible by n_heads");
  }
  if (context_window < 2) throw ConfigError("context_window", "must be at least 2");
  if (vocab_size < 6) throw ConfigError("vocab_size", "must be at least 6");
  if (mlp_mult == 0) throw ConfigError("mlp_mult", "must be positive");
  if (pe_scheme == PeScheme::kRelative && rel_max_distance < 1) {
    throw ConfigError("rel_max_distance", "must be positive for the relative scheme");
  }
  if (pe_scheme == PeScheme::kSinusoidal && d_model % 2 != 0) {
    throw ConfigError("d_model", "must be even for the sinusoidal scheme");
  }
}

}  // namespace posphase::model
