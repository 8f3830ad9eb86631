#include "posphase/data/vocab.hpp"

#include <sstream>

#include "posphase/errors.hpp"

namespace posphase::data {

Vocab::Vocab(const std::vector<std::string>& words)
    : words_{"[PAD]", "[CLS]", "[EOS]", "[MASK]", "[UNK]"} {
  for (std::size_t i = 0; i < words_.size(); ++i) {
    index_.emplace(words_[i], static_cast<TokenId>(i));
  }
  for (const auto& w : words) {
    if (w.empty() || w.find_first_of(" \t\n") != std::string::npos) {
      throw ConfigError("lexicon", "invalid word '" + w + "'");
    }
    if (!index_.emplace(w, static_cast<TokenId>(words_.size())).second) {
      throw ConfigError("lexicon", "duplicate word '" + w + "'");
    }
    words_.push_back(w);
  }
}

bool Vocab::contains(std::string_view word) const {
  return index_.find(std::string(word)) != index_.end();
}

TokenId Vocab::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? model::kUnk : it->second;
}

const std::string& Vocab::word(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= words_.size()) {
    throw RangeError("token id " + std::to_string(id) + " outside vocabulary");
  }
  return words_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Vocab::encode(std::string_view line) const {
  std::istringstream in{std::string(line)};
  std::vector<TokenId> ids;
  std::string w;
  while (in >> w) {
    auto it = index_.find(w);
    if (it == index_.end()) throw IoError("unknown word '" + w + "'");
    ids.push_back(it->second);
  }
  return ids;
}

std::string Vocab::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += word(ids[i]);
  }
  return out;
}

}  // namespace posphase::data
