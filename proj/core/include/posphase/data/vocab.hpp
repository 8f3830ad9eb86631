#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "posphase/model/special_tokens.hpp"

namespace posphase::data {

using model::TokenId;

// Reserved specials (PAD, CLS, EOS, MASK, UNK at ids 0..4) followed by the
// lexicon in the order given.
class Vocab {
 public:
  // Throws ConfigError on a duplicate or empty word.
  explicit Vocab(const std::vector<std::string>& words);

  std::size_t size() const { return words_.size(); }
  bool contains(std::string_view word) const;
  // UNK for an unknown word.
  TokenId id(std::string_view word) const;
  const std::string& word(TokenId id) const;

  // Splits on whitespace. Throws IoError on a word outside the vocabulary.
  std::vector<TokenId> encode(std::string_view line) const;
  std::string decode(std::span<const TokenId> ids) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace posphase::data
