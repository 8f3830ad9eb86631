#include "posphase/model/token_sequence.hpp"

#include <string>

#include "posphase/errors.hpp"

namespace posphase::model {

void TokenSequence::validate(std::size_t vocab_size, std::size_t context_window) const {
  if (token_ids.empty()) throw UsageError("empty token sequence");
  if (position_ids.size() != token_ids.size() || loss_mask.size() != token_ids.size()) {
    throw UsageError("token, position and mask lists differ in length");
  }
  if (token_ids.size() > context_window) {
    throw RangeError("sequence of " + std::to_string(token_ids.size()) +
                     " tokens exceeds the context window of " +
                     std::to_string(context_window));
  }
  for (std::size_t i = 0; i < token_ids.size(); ++i) {
    if (token_ids[i] < 0 || static_cast<std::size_t>(token_ids[i]) >= vocab_size) {
      throw RangeError("token id " + std::to_string(token_ids[i]) + " outside vocabulary");
    }
    if (position_ids[i] < 0 || static_cast<std::size_t>(position_ids[i]) >= context_window) {
      throw RangeError("position id " + std::to_string(position_ids[i]) +
                       " outside context window of " + std::to_string(context_window));
    }
    if (i >= 1 && position_ids[i] <= position_ids[i - 1]) {
      throw UsageError("position ids must be strictly increasing");
    }
  }
}

}  // namespace posphase::model
