#include "posphase/phaseshift/shift.hpp"

#include <charconv>
#include <string>

#include "posphase/errors.hpp"

namespace posphase::phaseshift {

std::int64_t max_position_id(const ShiftSpec& spec, std::size_t sequence_length) {
  if (sequence_length == 0) return -1;
  if (spec.pin_first && sequence_length == 1) return 0;
  return static_cast<std::int64_t>(spec.k) + static_cast<std::int64_t>(sequence_length) - 1;
}

void validate_shift(const ShiftSpec& spec, std::size_t sequence_length,
                    std::size_t context_window) {
  if (spec.k < 0) throw RangeError("negative phase shift " + std::to_string(spec.k));
  const std::int64_t last = max_position_id(spec, sequence_length);
  if (last >= static_cast<std::int64_t>(context_window)) {
    throw RangeError("shift k=" + std::to_string(spec.k) + " with " +
                     std::to_string(sequence_length) + " tokens reaches position " +
                     std::to_string(last) + ", beyond a context window of " +
                     std::to_string(context_window));
  }
}

std::int64_t max_valid_shift(std::size_t sequence_length, std::size_t context_window) {
  return static_cast<std::int64_t>(context_window) - static_cast<std::int64_t>(sequence_length);
}

std::vector<TokenId> build_position_ids(std::size_t content_length, const ShiftSpec& spec,
                                        std::size_t context_window) {
  const std::size_t m = spec.prefix.size() + content_length;
  validate_shift(spec, m, context_window);
  std::vector<TokenId> ids(m);
  for (std::size_t i = 0; i < m; ++i) ids[i] = spec.k + static_cast<TokenId>(i);
  if (spec.pin_first && m > 0) ids[0] = 0;
  return ids;
}

model::TokenSequence apply_template(std::span<const TokenId> sentence, const ShiftSpec& spec,
                                    std::size_t context_window) {
  if (sentence.empty()) throw UsageError("apply_template: empty sentence");
  model::TokenSequence seq;
  seq.token_ids = spec.prefix;
  seq.token_ids.insert(seq.token_ids.end(), sentence.begin(), sentence.end());
  seq.position_ids = build_position_ids(sentence.size(), spec, context_window);
  seq.loss_mask.assign(seq.token_ids.size(), true);
  for (std::size_t i = 0; i < spec.prefix.size(); ++i) seq.loss_mask[i] = false;
  return seq;
}

std::vector<std::int32_t> parse_shift_list(std::string_view text) {
  std::vector<std::int32_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    std::string_view item = text.substr(start, comma - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    std::int32_t value = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size() || value < 0) {
      throw ConfigError("shifts", "invalid shift entry '" + std::string(item) + "'");
    }
    out.push_back(value);
    start = comma + 1;
  }
  return out;
}

std::vector<std::int32_t> default_shifts(std::size_t context_window,
                                         std::size_t max_sequence_length, std::int32_t step) {
  if (step <= 0) throw ConfigError("shift_step", "must be positive");
  std::vector<std::int32_t> out;
  const std::int64_t limit = max_valid_shift(max_sequence_length, context_window);
  for (std::int64_t k = 0; k <= limit; k += step) out.push_back(static_cast<std::int32_t>(k));
  return out;
}

}  // namespace posphase::phaseshift
