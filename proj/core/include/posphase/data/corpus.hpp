#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "posphase/data/grammar.hpp"
#include "posphase/model/token_sequence.hpp"

namespace posphase::data {

using Sentence = std::vector<TokenId>;

// One context window of packed sentences: EOS before each sentence, PAD after
// the last, positions 0..T-1, loss_mask false on PAD only.
struct PackedWindow {
  std::vector<TokenId> token_ids;
  std::vector<TokenId> position_ids;
  std::vector<bool> loss_mask;

  // Training view with trailing PAD dropped; positions are unchanged.
  model::TokenSequence to_sequence() const;
};

// Greedy in-order packing. A sentence that does not fit starts the next
// window. SizeError if some sentence needs more than T slots.
std::vector<PackedWindow> pack_corpus(const std::vector<Sentence>& sentences,
                                      std::size_t context_window);

// One [CLS][EOS]<sentence> sequence per sentence at positions 0..n+1, loss
// masked off on CLS. SizeError if n + 2 > T.
std::vector<model::TokenSequence> fixed_start_corpus(const std::vector<Sentence>& sentences,
                                                     std::size_t context_window);

// Drops special tokens, recovering the sentence from a templated sequence.
Sentence strip_specials(const std::vector<TokenId>& tokens);

// Corpus dumps: one sentence per line of space-separated words; pairs as
// "good<TAB>bad" lines.
void write_sentences(std::ostream& out, const std::vector<Sentence>& sentences,
                     const Vocab& vocab);
std::vector<Sentence> read_sentences(std::istream& in, const Vocab& vocab);
void write_pairs(std::ostream& out, const std::vector<MinimalPair>& pairs, const Vocab& vocab);
std::vector<MinimalPair> read_pairs(std::istream& in, const Vocab& vocab);

}  // namespace posphase::data
