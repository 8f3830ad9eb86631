#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "posphase/data/corpus.hpp"
#include "posphase/data/grammar.hpp"
#include "posphase/errors.hpp"
#include "posphase/model/training.hpp"
#include "posphase/numerics/ops.hpp"
#include "posphase/scoring/sweep.hpp"
#include "test_support.hpp"

using namespace posphase;
using namespace posphase::scoring;
using model::AttentionMode;
using model::PeScheme;
using posphase::testing::random_sequence;
using posphase::testing::tiny_config;

namespace {

// Zero token table: tied logits vanish, so every prediction is uniform.
model::Transformer uniform_model(AttentionMode mode, std::size_t vocab) {
  auto m = model::build_model(tiny_config(PeScheme::kLearnedApe, mode, vocab), 1);
  for (auto& v : m.parameter("tok_emb").mutable_data()) v = 0.0f;
  return m;
}

// Independent pseudo-perplexity: rebuild each masked copy from scratch and
// normalize with a direct log-sum-exp.
double rebuilt_pseudo_ppl(const model::Transformer& m, const model::TokenSequence& seq) {
  double nll = 0;
  int count = 0;
  for (std::size_t t = 0; t < seq.size(); ++t) {
    if (model::is_special(seq.token_ids[t])) continue;
    model::TokenSequence copy;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      copy.token_ids.push_back(i == t ? model::kMask : seq.token_ids[i]);
      copy.position_ids.push_back(seq.position_ids[i]);
      copy.loss_mask.push_back(seq.loss_mask[i]);
    }
    auto logits = m.forward(copy).logits;
    const std::size_t V = logits.cols();
    double mx = -1e300;
    for (std::size_t v = 0; v < V; ++v) mx = std::max(mx, double(logits.at(t, v)));
    double s = 0;
    for (std::size_t v = 0; v < V; ++v) s += std::exp(double(logits.at(t, v)) - mx);
    nll += mx + std::log(s) - logits.at(t, seq.token_ids[t]);
    ++count;
  }
  return std::exp(nll / count);
}

const data::GrammarSpec& grammar() {
  static const auto g = data::GrammarSpec::standard();
  return g;
}

model::ModelConfig grammar_config(PeScheme scheme, AttentionMode mode) {
  return tiny_config(scheme, mode, grammar().vocab().size(), 64);
}

}  // namespace

TEST(Perplexity, UniformLogitsGiveVocabularySize) {
  for (std::size_t V : {7u, 20u, 67u}) {
    auto causal = uniform_model(AttentionMode::kCausal, V);
    auto masked = uniform_model(AttentionMode::kBidirectional, V);
    for (std::uint64_t s = 0; s < 5; ++s) {
      auto seq = random_sequence(1 + s, V, s);
      EXPECT_NEAR(causal_ppl(causal, seq) / V, 1.0, 1e-12);
      EXPECT_NEAR(pseudo_ppl(masked, seq) / V, 1.0, 1e-12);
    }
  }
}

TEST(Perplexity, PseudoMatchesRebuildOracle) {
  auto m = model::build_model(tiny_config(PeScheme::kLearnedApe, AttentionMode::kBidirectional), 3);
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto seq = random_sequence(1 + s % 9, 20, s, s % 5);
    const double expected = rebuilt_pseudo_ppl(m, seq);
    EXPECT_NEAR(pseudo_ppl(m, seq) / expected, 1.0, 1e-6);
  }
}

TEST(Perplexity, SingleContentTokenIsItsMaskedPerplexity) {
  auto m = model::build_model(tiny_config(PeScheme::kSinusoidal, AttentionMode::kBidirectional), 3);
  auto seq = random_sequence(1, 20, 4);
  auto copy = seq;
  copy.token_ids[2] = model::kMask;
  const double lp = numerics::log_prob<float>(m.forward(copy).logits.data().subspan(2 * 20, 20),
                                              seq.token_ids[2]);
  EXPECT_NEAR(pseudo_ppl(m, seq), std::exp(-lp), 1e-9);
}

TEST(Perplexity, StrictlyPositiveAndDispatchesOnMode) {
  auto causal = model::build_model(tiny_config(PeScheme::kNone, AttentionMode::kCausal), 3);
  auto masked = model::build_model(tiny_config(PeScheme::kNone, AttentionMode::kBidirectional), 3);
  auto seq = random_sequence(5, 20, 1);
  EXPECT_GT(causal_ppl(causal, seq), 0.0);
  EXPECT_EQ(perplexity(causal, seq), causal_ppl(causal, seq));
  EXPECT_EQ(perplexity(masked, seq), pseudo_ppl(masked, seq));
}

TEST(Perplexity, NoContentIsEmptyLossError) {
  auto m = model::build_model(tiny_config(PeScheme::kNone, AttentionMode::kCausal), 3);
  model::TokenSequence seq{{model::kCls, model::kEos}, {0, 1}, {false, false}};
  EXPECT_THROW(causal_ppl(m, seq), EmptyLossError);
  EXPECT_THROW(pseudo_ppl(m, seq), EmptyLossError);
}

TEST(Perplexity, MemorizedSentenceApproachesOne) {
  auto m = model::build_model(tiny_config(PeScheme::kLearnedApe, AttentionMode::kCausal), 3);
  std::vector<model::TokenSequence> corpus{random_sequence(6, 20, 8)};
  model::TrainOptions opts;
  opts.steps = 150;
  opts.batch_size = 1;
  opts.adam.lr = 1e-2;
  model::train_language_model(m, corpus, opts);
  EXPECT_LT(causal_ppl(m, corpus[0]), 1.5);
}

TEST(PairAccuracy, UntrainedModelsAreNearChance) {
  auto pairs = data::gen_minimal_pairs(grammar(), 1000, 7);
  double total = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    auto m = model::build_model(grammar_config(PeScheme::kLearnedApe, AttentionMode::kCausal), seed);
    total += pair_accuracy(m, pairs, phaseshift::ShiftSpec{});
  }
  EXPECT_NEAR(total / 6, 0.5, 0.05);
}

TEST(PairAccuracy, TiesCountAsFailures) {
  auto m = model::build_model(grammar_config(PeScheme::kNone, AttentionMode::kCausal), 1);
  auto pairs = data::gen_minimal_pairs(grammar(), 5, 1);
  for (auto& p : pairs) p.bad = p.good;
  EXPECT_EQ(pair_accuracy(m, pairs, phaseshift::ShiftSpec{}), 0.0);
}

TEST(PairAccuracy, RuleCheckerScorerIsPerfect) {
  const auto vocab = grammar().vocab();
  Scorer oracle = [&](const model::TokenSequence& seq) {
    auto sentence = data::strip_specials(seq.token_ids);
    return data::check_agreement(grammar(), vocab, sentence) == data::Verdict::kGrammatical ? 1.0
                                                                                            : 2.0;
  };
  auto pairs = data::gen_minimal_pairs(grammar(), 300, 2);
  EXPECT_EQ(pair_accuracy(oracle, pairs, phaseshift::ShiftSpec{}, 64), 1.0);
}

TEST(PhaseSweep, ZeroShiftReproducesPairAccuracy) {
  auto m = model::build_model(grammar_config(PeScheme::kLearnedApe, AttentionMode::kCausal), 4);
  auto pairs = data::gen_minimal_pairs(grammar(), 60, 3);
  auto sweep = phase_sweep(m, pairs, {0}, phaseshift::ShiftSpec{});
  EXPECT_EQ(sweep.values[0], pair_accuracy(m, pairs, phaseshift::ShiftSpec{}));
  EXPECT_EQ(sweep.per_item.size(), 120u);
  EXPECT_EQ(sweep.n_items, 60u);
}

TEST(PhaseSweep, ThreadCountDoesNotChangeResults) {
  auto m = model::build_model(grammar_config(PeScheme::kLearnedApe, AttentionMode::kBidirectional), 4);
  auto pairs = data::gen_minimal_pairs(grammar(), 20, 3);
  auto a = phase_sweep(m, pairs, {0, 10, 30}, phaseshift::ShiftSpec{}, 1);
  auto b = phase_sweep(m, pairs, {0, 10, 30}, phaseshift::ShiftSpec{}, 3);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.per_item, b.per_item);
}

TEST(PhaseSweep, ShiftInvariantSchemesGiveConstantRows) {
  auto pairs = data::gen_minimal_pairs(grammar(), 30, 3);
  for (auto scheme : {PeScheme::kRelative, PeScheme::kNone}) {
    for (auto mode : posphase::testing::kAllModes) {
      auto m = model::build_model(grammar_config(scheme, mode), 4);
      auto sweep = phase_sweep(m, pairs, {0, 16, 32, 50}, phaseshift::ShiftSpec{});
      for (double v : sweep.values) EXPECT_EQ(v, sweep.values[0]);
      for (const auto& row : sweep.per_item) {
        for (double v : row) EXPECT_NEAR(v / row[0], 1.0, 1e-6);
      }
      auto hist = best_phase_histogram(sweep.per_item, sweep.shifts);
      EXPECT_EQ(hist[0], sweep.per_item.size());
    }
  }
}

TEST(PhaseSweep, InvalidShiftListsOffendingItems) {
  auto m = model::build_model(grammar_config(PeScheme::kNone, AttentionMode::kCausal), 4);
  auto pairs = data::gen_minimal_pairs(grammar(), 10, 3);
  try {
    phase_sweep(m, pairs, {0, 60}, phaseshift::ShiftSpec{});
    FAIL();
  } catch (const RangeError& e) {
    EXPECT_NE(std::string(e.what()).find("item 0 at k=60"), std::string::npos) << e.what();
  }
}

TEST(Histogram, PartitionAndTieRule) {
  std::vector<std::vector<double>> ppl{{3, 2, 2}, {1, 1, 1}, {5, 6, 4}, {2, 3, 4}};
  auto counts = best_phase_histogram(ppl, {0, 10, 20});
  EXPECT_EQ(counts, (std::vector<std::size_t>{2, 1, 1}));
  EXPECT_THROW(best_phase_histogram({{1, 2}}, {0, 10, 20}), ShapeError);
}

TEST(Csv, SweepAndHistogramColumns) {
  SweepResult r;
  r.shifts = {0, 10};
  r.values = {0.75, 0.5};
  r.n_items = 4;
  r.seed = 9;
  r.model_id = "m";
  r.pe_scheme = "learned_ape";
  std::ostringstream out;
  write_sweep_csv(out, {r});
  EXPECT_EQ(out.str(),
            "model_id,pe_scheme,k,metric,value,n_items,seed\n"
            "m,learned_ape,0,pair_accuracy,0.75,4,9\n"
            "m,learned_ape,10,pair_accuracy,0.5,4,9\n");
  std::ostringstream hist;
  write_histogram_csv(hist, {0, 10}, {3, 1});
  EXPECT_EQ(hist.str(), "k,count,fraction\n0,3,0.75\n10,1,0.25\n");
}
