#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "posphase/data/vocab.hpp"

namespace posphase::data {

struct NumberPair {
  std::string singular;
  std::string plural;
};

// Agreement grammar:
//   S  -> NP [PP] VP
//   NP -> Det [Adj] N          (Det agrees with N)
//   PP -> Prep NP
//   VP -> Vintr Adv | Vtr NP   (V agrees with the subject NP's head noun)
// Sentences are 4 to 11 words long.
struct GrammarSpec {
  std::vector<std::string> det_singular;
  std::vector<std::string> det_plural;
  std::vector<std::string> det_any;
  std::vector<std::string> adjectives;
  std::vector<NumberPair> nouns;
  std::vector<NumberPair> intransitive_verbs;
  std::vector<NumberPair> transitive_verbs;
  std::vector<std::string> prepositions;
  std::vector<std::string> adverbs;
  double p_adjective = 0.3;
  // Most subjects carry a PP attractor, so agreement needs word order.
  double p_pp = 0.8;
  double p_transitive = 0.5;

  // The 62-word default lexicon.
  static GrammarSpec standard();

  // Every word once, in a fixed order.
  std::vector<std::string> lexicon() const;
  Vocab vocab() const;
  // ConfigError when a production has no words to draw from.
  void validate() const;
};

struct MinimalPair {
  std::vector<TokenId> good;
  std::vector<TokenId> bad;
  std::string phenomenon;
};

struct LabeledSentence {
  std::vector<TokenId> tokens;
  int label = 0;  // 1 grammatical, 0 corrupted
};

// Grammatical sentences, a pure function of (spec, count, seed).
std::vector<std::vector<TokenId>> gen_sentences(const GrammarSpec& spec, std::size_t count,
                                                std::uint64_t seed);

// The bad member swaps the verb's number.
std::vector<MinimalPair> gen_minimal_pairs(const GrammarSpec& spec, std::size_t count,
                                           std::uint64_t seed);

// ceil(count/2) grammatical and floor(count/2) verb-corrupted sentences in
// seeded random order. UsageError if count < 2.
std::vector<LabeledSentence> gen_classification(const GrammarSpec& spec, std::size_t count,
                                                std::uint64_t seed);

enum class Verdict { kGrammatical, kAgreementViolation, kUnparseable };

// Rule-based parser and agreement checker, independent of the generator.
Verdict check_agreement(const GrammarSpec& spec, const Vocab& vocab,
                        std::span<const TokenId> sentence);

}  // namespace posphase::data
