#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "posphase/errors.hpp"
#include "posphase/finetune/finetune.hpp"
#include "test_support.hpp"

using namespace posphase;
using namespace posphase::finetune;
using model::AttentionMode;
using model::PeScheme;
using posphase::testing::tiny_config;

namespace {

model::Transformer base_model(PeScheme scheme, AttentionMode mode, std::uint64_t seed = 2) {
  return model::build_model(tiny_config(scheme, mode, 67, 64), seed);
}

// Label = whether the sentence contains any plural noun; separable from
// token identity alone.
TaskData easy_task(std::size_t n_train, std::size_t n_val) {
  auto g = data::GrammarSpec::standard();
  auto v = g.vocab();
  std::set<model::TokenId> plural;
  for (const auto& n : g.nouns) plural.insert(v.id(n.plural));
  TaskData task;
  task.task_id = "easy";
  auto make = [&](std::size_t count, std::uint64_t seed) {
    std::vector<data::LabeledSentence> out;
    std::size_t per_label[2] = {0, 0};
    for (const auto& s : data::gen_sentences(g, 8 * count, seed)) {
      const int label = std::any_of(s.begin(), s.end(),
                                    [&](model::TokenId id) { return plural.count(id) > 0; });
      if (per_label[label] >= count / 2) continue;
      ++per_label[label];
      out.push_back({s, label});
    }
    return out;
  };
  task.train = make(n_train, 1);
  task.validation = make(n_val, 2);
  return task;
}

}  // namespace

TEST(AttachHead, AddsHeadWithoutTouchingBase) {
  auto base = base_model(PeScheme::kLearnedApe, AttentionMode::kCausal);
  const auto before = base.fingerprint();
  auto a = attach_head(base, 3, 7), b = attach_head(base, 3, 7);
  EXPECT_EQ(base.fingerprint(), before);
  EXPECT_FALSE(base.has_parameter("head.weight"));
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_NE(a.fingerprint(), attach_head(base, 3, 8).fingerprint());
  EXPECT_EQ(head_classes(a), 3u);
  auto seq = phaseshift::apply_template(std::vector<model::TokenId>{10, 11}, {}, 64);
  auto logits = classify(a, seq);
  EXPECT_EQ(logits.rows(), 1u);
  EXPECT_EQ(logits.cols(), 3u);
  EXPECT_THROW(attach_head(base, 1, 0), UsageError);
  EXPECT_THROW(attach_head(a, 2, 0), UsageError);
}

TEST(AttachHead, PoolingFollowsAttentionMode) {
  // Causal: the pooled state is the last token's, so only the last token
  // matters for perturbations at the end. Bidirectional: CLS slot.
  auto causal = attach_head(base_model(PeScheme::kNone, AttentionMode::kCausal), 2, 1);
  auto seq = phaseshift::apply_template(std::vector<model::TokenId>{10, 11, 12}, {}, 64);
  auto hidden = causal.hidden_states(seq);
  auto logits = classify(causal, seq);
  const auto& w = causal.parameter("head.weight");
  double dot = 0;
  for (std::size_t j = 0; j < 16; ++j) dot += double(hidden.at(seq.size() - 1, j)) * w.at(j, 0);
  EXPECT_NEAR(logits.at(0, 0), dot, 1e-5);

  auto bidir = attach_head(base_model(PeScheme::kNone, AttentionMode::kBidirectional), 2, 1);
  hidden = bidir.hidden_states(seq);
  logits = classify(bidir, seq);
  dot = 0;
  for (std::size_t j = 0; j < 16; ++j) dot += double(hidden.at(0, j)) * bidir.parameter("head.weight").at(j, 0);
  EXPECT_NEAR(logits.at(0, 0), dot, 1e-5);
}

TEST(Finetune, ZeroStepsIsChance) {
  auto task = make_agreement_task(data::GrammarSpec::standard(), 20, 400, 3);
  FinetuneHyper h;
  h.steps = 0;
  double total = 0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    total += finetune_task(base_model(PeScheme::kLearnedApe, AttentionMode::kCausal, seed), task,
                           {}, h, seed)
                 .validation_accuracy;
  }
  EXPECT_NEAR(total / 4, 0.5, 0.07);
}

TEST(Finetune, EasyTaskIsLearned) {
  auto task = easy_task(200, 200);
  FinetuneHyper h;
  h.steps = 150;
  h.batch_size = 16;
  h.lr = 3e-3;
  auto result = finetune_task(base_model(PeScheme::kLearnedApe, AttentionMode::kBidirectional),
                              task, {}, h, 4);
  EXPECT_GE(result.validation_accuracy, 0.95);
}

TEST(Finetune, DeterministicAndIsolated) {
  auto base = base_model(PeScheme::kLearnedApe, AttentionMode::kCausal);
  const auto hash = base.fingerprint();
  auto task = make_agreement_task(data::GrammarSpec::standard(), 40, 40, 5);
  FinetuneHyper h;
  h.steps = 5;
  h.batch_size = 4;
  phaseshift::ShiftSpec shift;
  shift.k = 20;
  auto a = finetune_task(base, task, shift, h, 9);
  auto b = finetune_task(base, task, shift, h, 9);
  EXPECT_EQ(a.validation_accuracy, b.validation_accuracy);
  EXPECT_EQ(a.model.fingerprint(), b.model.fingerprint());
  EXPECT_EQ(base.fingerprint(), hash);
}

TEST(Finetune, FrozenPositionsStayFixed) {
  auto base = base_model(PeScheme::kLearnedApe, AttentionMode::kCausal);
  auto task = make_agreement_task(data::GrammarSpec::standard(), 20, 20, 5);
  FinetuneHyper h;
  h.steps = 3;
  h.batch_size = 4;
  h.freeze_positions = true;
  auto tuned = finetune_task(base, task, {}, h, 1).model;
  auto a = base.parameter("pos_emb").data(), b = tuned.parameter("pos_emb").data();
  EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  h.freeze_positions = false;
  auto moved = finetune_task(base, task, {}, h, 1).model.parameter("pos_emb").data();
  EXPECT_FALSE(std::equal(a.begin(), a.end(), moved.begin()));
}

TEST(Finetune, Errors) {
  auto base = base_model(PeScheme::kLearnedApe, AttentionMode::kCausal);
  auto task = make_agreement_task(data::GrammarSpec::standard(), 20, 20, 5);
  phaseshift::ShiftSpec far;
  far.k = 60;
  EXPECT_THROW(finetune_task(base, task, far, {}, 1), RangeError);
  auto unbalanced = task;
  for (auto& item : unbalanced.train) item.label = 1;
  EXPECT_THROW(finetune_task(base, unbalanced, {}, {}, 1), UsageError);
}

TEST(PhaseMatrixTest, ShapeBoundsAndCsv) {
  auto base = base_model(PeScheme::kLearnedApe, AttentionMode::kCausal);
  auto task = make_agreement_task(data::GrammarSpec::standard(), 16, 24, 5);
  FinetuneHyper h;
  h.steps = 3;
  h.batch_size = 4;
  auto m = cross_phase_matrix(base, task, {0, 20}, {0, 20, 40}, {1, 2}, {}, h);
  ASSERT_EQ(m.mean.size(), 2u);
  ASSERT_EQ(m.mean[0].size(), 3u);
  for (const auto& row : m.mean) {
    for (double v : row) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  auto again = cross_phase_matrix(base, task, {0, 20}, {0, 20, 40}, {1, 2}, {}, h, 2);
  EXPECT_EQ(again.mean, m.mean);
  EXPECT_EQ(again.std, m.std);

  std::ostringstream out;
  write_matrix_csv(out, m);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "task_id,k_train,k_eval,mean_acc,std_acc,n_seeds");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 7);
}

TEST(PhaseMatrixTest, RelativeRowsAreConstant) {
  auto base = base_model(PeScheme::kRelative, AttentionMode::kBidirectional);
  auto task = make_agreement_task(data::GrammarSpec::standard(), 16, 40, 6);
  FinetuneHyper h;
  h.steps = 4;
  h.batch_size = 4;
  auto m = cross_phase_matrix(base, task, {0, 25}, {0, 25, 50}, {3}, {}, h);
  for (std::size_t r = 0; r < 2; ++r) {
    for (double v : m.mean[r]) EXPECT_NEAR(v, m.mean[r][0], 1e-6);
  }
}

TEST(PhaseMatrixTest, DiagonalAndOffDiagonalMeans) {
  PhaseMatrix m;
  m.train_shifts = {0, 10};
  m.eval_shifts = {0, 10};
  m.mean = {{0.9, 0.6}, {0.5, 0.8}};
  EXPECT_NEAR(diagonal_mean(m), 0.85, 1e-12);
  EXPECT_NEAR(off_diagonal_mean(m), 0.55, 1e-12);
}
