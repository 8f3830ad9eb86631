#include "posphase/data/corpus.hpp"

#include <istream>
#include <ostream>
#include <string>

#include "posphase/errors.hpp"

namespace posphase::data {

using model::kCls;
using model::kEos;
using model::kPad;

model::TokenSequence PackedWindow::to_sequence() const {
  std::size_t used = token_ids.size();
  while (used > 0 && token_ids[used - 1] == kPad) --used;
  model::TokenSequence seq;
  seq.token_ids.assign(token_ids.begin(), token_ids.begin() + static_cast<std::ptrdiff_t>(used));
  seq.position_ids.assign(position_ids.begin(),
                          position_ids.begin() + static_cast<std::ptrdiff_t>(used));
  seq.loss_mask.assign(loss_mask.begin(), loss_mask.begin() + static_cast<std::ptrdiff_t>(used));
  return seq;
}

std::vector<PackedWindow> pack_corpus(const std::vector<Sentence>& sentences,
                                      std::size_t context_window) {
  std::vector<PackedWindow> windows;
  PackedWindow current;
  auto close = [&] {
    if (current.token_ids.empty()) return;
    while (current.token_ids.size() < context_window) {
      current.token_ids.push_back(kPad);
      current.loss_mask.push_back(false);
    }
    current.position_ids.resize(context_window);
    for (std::size_t p = 0; p < context_window; ++p) {
      current.position_ids[p] = static_cast<TokenId>(p);
    }
    windows.push_back(std::move(current));
    current = PackedWindow{};
  };

  for (const auto& s : sentences) {
    if (s.empty()) continue;
    if (s.size() + 1 > context_window) {
      throw SizeError("sentence of " + std::to_string(s.size()) +
                      " tokens does not fit a window of " + std::to_string(context_window));
    }
    if (current.token_ids.size() + s.size() + 1 > context_window) close();
    current.token_ids.push_back(kEos);
    current.loss_mask.push_back(true);
    current.token_ids.insert(current.token_ids.end(), s.begin(), s.end());
    current.loss_mask.insert(current.loss_mask.end(), s.size(), true);
  }
  close();
  return windows;
}

std::vector<model::TokenSequence> fixed_start_corpus(const std::vector<Sentence>& sentences,
                                                     std::size_t context_window) {
  std::vector<model::TokenSequence> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    if (s.size() + 2 > context_window) {
      throw SizeError("sentence of " + std::to_string(s.size()) +
                      " tokens does not fit a window of " + std::to_string(context_window));
    }
    model::TokenSequence seq;
    seq.token_ids = {kCls, kEos};
    seq.token_ids.insert(seq.token_ids.end(), s.begin(), s.end());
    seq.position_ids.resize(seq.token_ids.size());
    for (std::size_t p = 0; p < seq.position_ids.size(); ++p) {
      seq.position_ids[p] = static_cast<TokenId>(p);
    }
    seq.loss_mask.assign(seq.token_ids.size(), true);
    seq.loss_mask[0] = false;
    out.push_back(std::move(seq));
  }
  return out;
}

Sentence strip_specials(const std::vector<TokenId>& tokens) {
  Sentence out;
  for (TokenId t : tokens) {
    if (!model::is_special(t)) out.push_back(t);
  }
  return out;
}

void write_sentences(std::ostream& out, const std::vector<Sentence>& sentences,
                     const Vocab& vocab) {
  for (const auto& s : sentences) out << vocab.decode(s) << '\n';
}

std::vector<Sentence> read_sentences(std::istream& in, const Vocab& vocab) {
  std::vector<Sentence> out;
  std::string line;
  while (std::getline(in, line)) {
    auto ids = vocab.encode(line);
    if (!ids.empty()) out.push_back(std::move(ids));
  }
  return out;
}

void write_pairs(std::ostream& out, const std::vector<MinimalPair>& pairs, const Vocab& vocab) {
  for (const auto& p : pairs) out << vocab.decode(p.good) << '\t' << vocab.decode(p.bad) << '\n';
}

std::vector<MinimalPair> read_pairs(std::istream& in, const Vocab& vocab) {
  std::vector<MinimalPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw IoError("pair line " + std::to_string(line_no) + " has no tab separator");
    }
    out.push_back({vocab.encode(line.substr(0, tab)), vocab.encode(line.substr(tab + 1)), ""});
  }
  return out;
}

}  // namespace posphase::data
