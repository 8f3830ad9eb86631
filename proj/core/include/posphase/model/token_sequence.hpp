#pragma once

#include <cstddef>
#include <vector>

#include "posphase/model/config.hpp"

namespace posphase::model {

// Token ids with explicit per-token position ids. loss_mask[t] marks token t
// as a prediction target.
struct TokenSequence {
  std::vector<TokenId> token_ids;
  std::vector<TokenId> position_ids;
  std::vector<bool> loss_mask;

  std::size_t size() const { return token_ids.size(); }

  // RangeError if a token id is outside [0, vocab_size) or a position id
  // outside [0, context_window); UsageError on length mismatch or on
  // non-increasing positions. A pinned leading slot (id 0) still satisfies
  // this, since every shifted id after it is positive.
  void validate(std::size_t vocab_size, std::size_t context_window) const;

  bool operator==(const TokenSequence&) const = default;
};

}  // namespace posphase::model
