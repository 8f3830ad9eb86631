#include "posphase/data/grammar.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <unordered_map>

#include "posphase/errors.hpp"

namespace posphase::data {

namespace {

enum class Number { kSingular, kPlural };

Number flip(Number n) { return n == Number::kSingular ? Number::kPlural : Number::kSingular; }

const std::string& form(const NumberPair& p, Number n) {
  return n == Number::kSingular ? p.singular : p.plural;
}

template <typename T>
const T& pick(const std::vector<T>& items, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, items.size() - 1);
  return items[dist(rng)];
}

bool coin(double p, std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

struct Draft {
  std::vector<std::string> words;
  std::size_t verb_index = 0;
  const NumberPair* verb = nullptr;
  Number subject = Number::kSingular;
  bool has_pp = false;
};

void append_np(const GrammarSpec& spec, Number number, std::mt19937_64& rng,
               std::vector<std::string>& words) {
  const auto& specific = number == Number::kSingular ? spec.det_singular : spec.det_plural;
  const std::size_t choices = specific.size() + spec.det_any.size();
  const std::size_t d = std::uniform_int_distribution<std::size_t>(0, choices - 1)(rng);
  words.push_back(d < specific.size() ? specific[d] : spec.det_any[d - specific.size()]);
  if (!spec.adjectives.empty() && coin(spec.p_adjective, rng)) {
    words.push_back(pick(spec.adjectives, rng));
  }
  words.push_back(form(pick(spec.nouns, rng), number));
}

Number random_number(std::mt19937_64& rng) {
  return coin(0.5, rng) ? Number::kPlural : Number::kSingular;
}

Draft sample(const GrammarSpec& spec, std::mt19937_64& rng) {
  Draft draft;
  draft.subject = random_number(rng);
  append_np(spec, draft.subject, rng, draft.words);
  if (!spec.prepositions.empty() && coin(spec.p_pp, rng)) {
    draft.has_pp = true;
    draft.words.push_back(pick(spec.prepositions, rng));
    append_np(spec, random_number(rng), rng, draft.words);
  }
  const bool transitive = !spec.transitive_verbs.empty() &&
                          (spec.intransitive_verbs.empty() || coin(spec.p_transitive, rng));
  draft.verb = transitive ? &pick(spec.transitive_verbs, rng)
                          : &pick(spec.intransitive_verbs, rng);
  draft.verb_index = draft.words.size();
  draft.words.push_back(form(*draft.verb, draft.subject));
  if (transitive) {
    append_np(spec, random_number(rng), rng, draft.words);
  } else {
    draft.words.push_back(pick(spec.adverbs, rng));
  }
  return draft;
}

std::vector<TokenId> encode(const Vocab& vocab, const std::vector<std::string>& words) {
  std::vector<TokenId> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(vocab.id(w));
  return ids;
}

void corrupt_verb(Draft& draft) {
  draft.words[draft.verb_index] = form(*draft.verb, flip(draft.subject));
}

}  // namespace

GrammarSpec GrammarSpec::standard() {
  GrammarSpec g;
  g.det_singular = {"a", "this", "that", "every"};
  g.det_plural = {"these", "those", "several", "many"};
  g.det_any = {"the"};
  g.adjectives = {"big", "small", "old", "young", "happy", "quiet", "red", "clever"};
  g.nouns = {{"dog", "dogs"},         {"cat", "cats"},       {"bird", "birds"},
             {"teacher", "teachers"}, {"student", "students"}, {"farmer", "farmers"},
             {"child", "children"},   {"friend", "friends"}, {"doctor", "doctors"},
             {"artist", "artists"}};
  g.intransitive_verbs = {{"runs", "run"},   {"sleeps", "sleep"}, {"sings", "sing"},
                          {"waits", "wait"}, {"smiles", "smile"}};
  g.transitive_verbs = {{"sees", "see"}, {"likes", "like"}, {"helps", "help"}};
  g.prepositions = {"near", "behind", "with", "beside"};
  g.adverbs = {"quickly", "often", "today", "here", "again"};
  return g;
}

std::vector<std::string> GrammarSpec::lexicon() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto add = [&](const std::string& w) {
    if (seen.insert(w).second) out.push_back(w);
  };
  for (const auto& w : det_singular) add(w);
  for (const auto& w : det_plural) add(w);
  for (const auto& w : det_any) add(w);
  for (const auto& w : adjectives) add(w);
  for (const auto& p : nouns) add(p.singular), add(p.plural);
  for (const auto& p : intransitive_verbs) add(p.singular), add(p.plural);
  for (const auto& p : transitive_verbs) add(p.singular), add(p.plural);
  for (const auto& w : prepositions) add(w);
  for (const auto& w : adverbs) add(w);
  return out;
}

Vocab GrammarSpec::vocab() const { return Vocab(lexicon()); }

void GrammarSpec::validate() const {
  if (det_singular.empty() && det_any.empty()) {
    throw ConfigError("grammar.det_singular", "no determiner for singular nouns");
  }
  if (det_plural.empty() && det_any.empty()) {
    throw ConfigError("grammar.det_plural", "no determiner for plural nouns");
  }
  if (nouns.empty()) throw ConfigError("grammar.nouns", "empty");
  if (intransitive_verbs.empty() && transitive_verbs.empty()) {
    throw ConfigError("grammar.verbs", "no verbs");
  }
  if (!intransitive_verbs.empty() && adverbs.empty()) {
    throw ConfigError("grammar.adverbs", "intransitive verbs need adverbs");
  }
  for (double p : {p_adjective, p_pp, p_transitive}) {
    if (p < 0.0 || p > 1.0) throw ConfigError("grammar", "probabilities must lie in [0, 1]");
  }
}

std::vector<std::vector<TokenId>> gen_sentences(const GrammarSpec& spec, std::size_t count,
                                                std::uint64_t seed) {
  spec.validate();
  const Vocab vocab = spec.vocab();
  std::mt19937_64 rng(seed);
  std::vector<std::vector<TokenId>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(encode(vocab, sample(spec, rng).words));
  return out;
}

std::vector<MinimalPair> gen_minimal_pairs(const GrammarSpec& spec, std::size_t count,
                                           std::uint64_t seed) {
  spec.validate();
  const Vocab vocab = spec.vocab();
  std::mt19937_64 rng(seed);
  std::vector<MinimalPair> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Draft draft = sample(spec, rng);
    MinimalPair pair;
    pair.good = encode(vocab, draft.words);
    corrupt_verb(draft);
    pair.bad = encode(vocab, draft.words);
    pair.phenomenon = draft.has_pp ? "subject_verb_agreement_pp" : "subject_verb_agreement";
    out.push_back(std::move(pair));
  }
  return out;
}

std::vector<LabeledSentence> gen_classification(const GrammarSpec& spec, std::size_t count,
                                                std::uint64_t seed) {
  if (count < 2) throw UsageError("gen_classification needs at least two items");
  spec.validate();
  const Vocab vocab = spec.vocab();
  std::mt19937_64 rng(seed);
  std::vector<LabeledSentence> out;
  out.reserve(count);
  const std::size_t positives = (count + 1) / 2;
  for (std::size_t i = 0; i < count; ++i) {
    Draft draft = sample(spec, rng);
    const int label = i < positives ? 1 : 0;
    if (label == 0) corrupt_verb(draft);
    out.push_back({encode(vocab, draft.words), label});
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

Verdict check_agreement(const GrammarSpec& spec, const Vocab& vocab,
                        std::span<const TokenId> sentence) {
  enum class Category { kDet, kAdj, kNoun, kVerbIntr, kVerbTr, kPrep, kAdv };
  struct Entry {
    Category category;
    std::optional<Number> number;  // empty: compatible with either
  };
  std::unordered_map<std::string, Entry> lexicon;
  for (const auto& w : spec.det_singular) lexicon[w] = {Category::kDet, Number::kSingular};
  for (const auto& w : spec.det_plural) lexicon[w] = {Category::kDet, Number::kPlural};
  for (const auto& w : spec.det_any) lexicon[w] = {Category::kDet, std::nullopt};
  for (const auto& w : spec.adjectives) lexicon[w] = {Category::kAdj, std::nullopt};
  for (const auto& p : spec.nouns) {
    lexicon[p.singular] = {Category::kNoun, Number::kSingular};
    lexicon[p.plural] = {Category::kNoun, Number::kPlural};
  }
  for (const auto& p : spec.intransitive_verbs) {
    lexicon[p.singular] = {Category::kVerbIntr, Number::kSingular};
    lexicon[p.plural] = {Category::kVerbIntr, Number::kPlural};
  }
  for (const auto& p : spec.transitive_verbs) {
    lexicon[p.singular] = {Category::kVerbTr, Number::kSingular};
    lexicon[p.plural] = {Category::kVerbTr, Number::kPlural};
  }
  for (const auto& w : spec.prepositions) lexicon[w] = {Category::kPrep, std::nullopt};
  for (const auto& w : spec.adverbs) lexicon[w] = {Category::kAdv, std::nullopt};

  std::vector<Entry> tags;
  for (TokenId id : sentence) {
    if (model::is_special(id) || static_cast<std::size_t>(id) >= vocab.size()) {
      return Verdict::kUnparseable;
    }
    auto it = lexicon.find(vocab.word(id));
    if (it == lexicon.end()) return Verdict::kUnparseable;
    tags.push_back(it->second);
  }

  std::size_t pos = 0;
  bool agreement_ok = true;
  auto at = [&](Category c) { return pos < tags.size() && tags[pos].category == c; };
  // Returns the head noun's number, or nothing if no NP starts here.
  auto parse_np = [&]() -> std::optional<Number> {
    if (!at(Category::kDet)) return std::nullopt;
    const auto det = tags[pos++].number;
    if (at(Category::kAdj)) ++pos;
    if (!at(Category::kNoun)) return std::nullopt;
    const Number noun = *tags[pos++].number;
    if (det && *det != noun) agreement_ok = false;
    return noun;
  };

  const auto subject = parse_np();
  if (!subject) return Verdict::kUnparseable;
  if (at(Category::kPrep)) {
    ++pos;
    if (!parse_np()) return Verdict::kUnparseable;
  }
  if (at(Category::kVerbIntr)) {
    if (*tags[pos++].number != *subject) agreement_ok = false;
    if (!at(Category::kAdv)) return Verdict::kUnparseable;
    ++pos;
  } else if (at(Category::kVerbTr)) {
    if (*tags[pos++].number != *subject) agreement_ok = false;
    if (!parse_np()) return Verdict::kUnparseable;
  } else {
    return Verdict::kUnparseable;
  }
  if (pos != tags.size()) return Verdict::kUnparseable;
  return agreement_ok ? Verdict::kGrammatical : Verdict::kAgreementViolation;
}

}  // namespace posphase::data
