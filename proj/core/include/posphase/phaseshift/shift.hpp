#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "posphase/model/special_tokens.hpp"
#include "posphase/model/token_sequence.hpp"

namespace posphase::phaseshift {

using model::TokenId;

// A phase shift of k moves every position id right by k. With pin_first the
// leading slot (CLS, or BOS for causal models) stays at position 0.
struct ShiftSpec {
  std::int32_t k = 0;
  bool pin_first = false;
  std::vector<TokenId> prefix = {model::kCls, model::kEos};

  ShiftSpec with_k(std::int32_t shift) const {
    ShiftSpec s = *this;
    s.k = shift;
    return s;
  }
};

// Largest id assigned to a templated sequence of `sequence_length` slots.
std::int64_t max_position_id(const ShiftSpec& spec, std::size_t sequence_length);

// Throws RangeError unless every assigned id is below context_window.
void validate_shift(const ShiftSpec& spec, std::size_t sequence_length,
                    std::size_t context_window);

// Largest k accepted for sequence_length slots (pinned or not, the last id is
// k + sequence_length - 1). Negative when nothing fits.
std::int64_t max_valid_shift(std::size_t sequence_length, std::size_t context_window);

// Position ids for prefix.size() + content_length slots, 0-based:
//   unpinned: k, k+1, ..., k+m-1
//   pinned:   0, k+1, ..., k+m-1
std::vector<TokenId> build_position_ids(std::size_t content_length, const ShiftSpec& spec,
                                        std::size_t context_window);

// prefix + sentence with shifted positions; loss_mask is false on the prefix.
// UsageError for an empty sentence, RangeError when the shift does not fit.
model::TokenSequence apply_template(std::span<const TokenId> sentence, const ShiftSpec& spec,
                                    std::size_t context_window);

// "0,10,20" -> {0, 10, 20}. ConfigError on malformed or negative entries.
std::vector<std::int32_t> parse_shift_list(std::string_view text);

// 0, step, 2·step, ... up to the largest shift at which a sequence of
// max_sequence_length slots still fits.
std::vector<std::int32_t> default_shifts(std::size_t context_window,
                                         std::size_t max_sequence_length,
                                         std::int32_t step = 10);

}  // namespace posphase::phaseshift
