#pragma once

#include <numeric>
#include <random>
#include <vector>

#include "posphase/model/config.hpp"
#include "posphase/model/special_tokens.hpp"
#include "posphase/model/token_sequence.hpp"

namespace posphase::testing {

inline model::ModelConfig tiny_config(model::PeScheme scheme, model::AttentionMode mode,
                                      std::size_t vocab = 20, std::size_t T = 32) {
  model::ModelConfig cfg;
  cfg.d_model = 16;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.context_window = T;
  cfg.vocab_size = vocab;
  cfg.pe_scheme = scheme;
  cfg.attention_mode = mode;
  cfg.rel_max_distance = 4;
  return cfg;
}

// [CLS][EOS] followed by random content tokens at positions offset..offset+n-1.
inline model::TokenSequence random_sequence(std::size_t content, std::size_t vocab,
                                            std::uint64_t seed, model::TokenId offset = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<model::TokenId> pick(model::kFirstContentId,
                                                     static_cast<model::TokenId>(vocab - 1));
  model::TokenSequence seq;
  seq.token_ids = {model::kCls, model::kEos};
  for (std::size_t i = 0; i < content; ++i) seq.token_ids.push_back(pick(rng));
  seq.position_ids.resize(seq.token_ids.size());
  std::iota(seq.position_ids.begin(), seq.position_ids.end(), offset);
  seq.loss_mask.assign(seq.token_ids.size(), true);
  seq.loss_mask[0] = seq.loss_mask[1] = false;
  return seq;
}

inline model::TokenSequence shifted(model::TokenSequence seq, model::TokenId k) {
  for (auto& p : seq.position_ids) p += k;
  return seq;
}

inline constexpr model::PeScheme kAllSchemes[] = {
    model::PeScheme::kLearnedApe, model::PeScheme::kSinusoidal, model::PeScheme::kRelative,
    model::PeScheme::kNone};
inline constexpr model::AttentionMode kAllModes[] = {model::AttentionMode::kCausal,
                                                     model::AttentionMode::kBidirectional};

}  // namespace posphase::testing
