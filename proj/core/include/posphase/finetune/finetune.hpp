#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "posphase/data/grammar.hpp"
#include "posphase/model/transformer.hpp"
#include "posphase/phaseshift/shift.hpp"

namespace posphase::finetune {

using model::Transformer;

// Copy of `base` with a linear classifier over the pooled representation:
// head.weight (d_model × n_classes, Normal(0, 0.02²) from `seed`) and
// head.bias (zeros). The pooled vector is the final hidden state at the CLS
// slot (index 0) for bidirectional models and at the last token for causal
// ones. UsageError if n_classes < 2 or the model already has a head.
Transformer attach_head(const Transformer& base, std::size_t n_classes, std::uint64_t seed);

std::size_t head_classes(const Transformer& model);

// 1 × n_classes logits for one templated sequence.
numerics::Tensor classify(const Transformer& model, const model::TokenSequence& seq);

struct FinetuneHyper {
  std::size_t steps = 500;
  std::size_t batch_size = 32;
  double lr = 3e-4;
  double clip_norm = 1.0;
  // Keep pos_emb fixed (ablation); everything else trains.
  bool freeze_positions = false;
  std::size_t n_classes = 2;
};

struct TaskData {
  std::string task_id = "agreement";
  std::vector<data::LabeledSentence> train;
  std::vector<data::LabeledSentence> validation;
};

// Standard synthetic task: gen_classification for both splits.
TaskData make_agreement_task(const data::GrammarSpec& spec, std::size_t n_train,
                             std::size_t n_validation, std::uint64_t seed);

// Fraction of items whose argmax class equals the label, templated under `spec`.
double evaluate_accuracy(const Transformer& model, const std::vector<data::LabeledSentence>& items,
                         const phaseshift::ShiftSpec& spec, std::size_t threads = 1);

struct FinetuneResult {
  Transformer model;
  double validation_accuracy = 0;
};

// Attaches a fresh head to a copy of `base` and trains it with Adam (no
// weight decay) on the task templated at base.k. RangeError if any item does
// not fit the shift, UsageError if the training labels are unbalanced by more
// than one. `base` is never modified.
FinetuneResult finetune_task(const Transformer& base, const TaskData& task,
                             const phaseshift::ShiftSpec& shift, const FinetuneHyper& hyper,
                             std::uint64_t seed);

struct PhaseMatrix {
  std::string task_id;
  std::vector<std::int32_t> train_shifts;
  std::vector<std::int32_t> eval_shifts;
  // rows = train shifts, cols = eval shifts; mean and population std over seeds
  std::vector<std::vector<double>> mean;
  std::vector<std::vector<double>> std;
  std::vector<std::uint64_t> seeds;
};

// Every (k_train, seed) cell fine-tunes its own copy of `base`; cells run on
// up to `threads` workers.
PhaseMatrix cross_phase_matrix(const Transformer& base, const TaskData& task,
                               const std::vector<std::int32_t>& train_shifts,
                               const std::vector<std::int32_t>& eval_shifts,
                               const std::vector<std::uint64_t>& seeds,
                               const phaseshift::ShiftSpec& base_shift,
                               const FinetuneHyper& hyper, std::size_t threads = 1);

// Mean of the entries whose train and eval shifts coincide, and of the rest.
double diagonal_mean(const PhaseMatrix& matrix);
double off_diagonal_mean(const PhaseMatrix& matrix);

// Columns: task_id, k_train, k_eval, mean_acc, std_acc, n_seeds.
void write_matrix_csv(std::ostream& out, const PhaseMatrix& matrix);
void write_matrix_csv(std::ostream& out, const std::vector<PhaseMatrix>& matrices);

}  // namespace posphase::finetune
