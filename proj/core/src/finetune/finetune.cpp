#include "posphase/finetune/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "posphase/csv.hpp"
#include "posphase/errors.hpp"
#include "posphase/model/training.hpp"
#include "posphase/numerics/ops.hpp"
#include "posphase/parallel.hpp"

namespace posphase::finetune {

namespace {

constexpr const char* kHeadWeight = "head.weight";
constexpr const char* kHeadBias = "head.bias";

void check_fits(const std::vector<data::LabeledSentence>& items,
                const phaseshift::ShiftSpec& spec, std::size_t context_window) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::size_t m = spec.prefix.size() + items[i].tokens.size();
    if (phaseshift::max_position_id(spec, m) >= static_cast<std::int64_t>(context_window)) {
      throw RangeError("shift k=" + std::to_string(spec.k) + " does not fit item " +
                       std::to_string(i) + " (" + std::to_string(m) + " slots, T=" +
                       std::to_string(context_window) + ")");
    }
  }
}

std::size_t argmax(std::span<const float> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = c;
  }
  return best;
}

}  // namespace

Transformer attach_head(const Transformer& base, std::size_t n_classes, std::uint64_t seed) {
  if (n_classes < 2) throw UsageError("attach_head: need at least two classes");
  if (base.has_parameter(kHeadWeight)) throw UsageError("attach_head: model already has a head");
  auto model = base.clone();
  const std::size_t d = base.config().d_model;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.02);
  std::vector<float> w(d * n_classes);
  for (auto& v : w) v = static_cast<float>(normal(rng));
  model.add_parameter(kHeadWeight, numerics::Tensor::from_data({d, n_classes}, std::move(w), true));
  model.add_parameter(kHeadBias, numerics::Tensor::zeros({n_classes}, true));
  return model;
}

std::size_t head_classes(const Transformer& model) {
  if (!model.has_parameter(kHeadWeight)) throw UsageError("model has no classification head");
  return model.parameter(kHeadWeight).dim(1);
}

numerics::Tensor classify(const Transformer& model, const model::TokenSequence& seq) {
  const auto hidden = model.hidden_states(seq);
  const std::int32_t pooled_index =
      model.config().attention_mode == model::AttentionMode::kBidirectional
          ? 0
          : static_cast<std::int32_t>(seq.size() - 1);
  const auto pooled = numerics::gather_rows(hidden, std::span<const std::int32_t>(&pooled_index, 1));
  return numerics::linear(pooled, model.parameter(kHeadWeight), model.parameter(kHeadBias));
}

TaskData make_agreement_task(const data::GrammarSpec& spec, std::size_t n_train,
                             std::size_t n_validation, std::uint64_t seed) {
  TaskData task;
  task.train = data::gen_classification(spec, n_train, seed);
  task.validation = data::gen_classification(spec, n_validation, seed ^ 0x5DEECE66Dull);
  return task;
}

double evaluate_accuracy(const Transformer& model, const std::vector<data::LabeledSentence>& items,
                         const phaseshift::ShiftSpec& spec, std::size_t threads) {
  if (items.empty()) throw UsageError("evaluate_accuracy: no items");
  const std::size_t T = model.config().context_window;
  check_fits(items, spec, T);
  std::vector<char> correct(items.size(), 0);
  parallel_for(items.size(), threads, [&](std::size_t i) {
    numerics::NoGradGuard guard;
    const auto seq = phaseshift::apply_template(items[i].tokens, spec, T);
    const auto logits = classify(model, seq);
    correct[i] = static_cast<int>(argmax(logits.data())) == items[i].label;
  });
  std::size_t hits = 0;
  for (char c : correct) hits += c ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(items.size());
}

FinetuneResult finetune_task(const Transformer& base, const TaskData& task,
                             const phaseshift::ShiftSpec& shift, const FinetuneHyper& hyper,
                             std::uint64_t seed) {
  if (task.train.empty() || task.validation.empty()) {
    throw UsageError("finetune_task: empty train or validation split");
  }
  const std::size_t T = base.config().context_window;
  check_fits(task.train, shift, T);
  check_fits(task.validation, shift, T);

  std::vector<std::size_t> per_class(hyper.n_classes, 0);
  for (const auto& item : task.train) {
    if (item.label < 0 || static_cast<std::size_t>(item.label) >= hyper.n_classes) {
      throw RangeError("finetune_task: label " + std::to_string(item.label) + " out of range");
    }
    ++per_class[static_cast<std::size_t>(item.label)];
  }
  const auto [lo, hi] = std::minmax_element(per_class.begin(), per_class.end());
  if (*hi - *lo > 1) throw UsageError("finetune_task: training labels are unbalanced");

  FinetuneResult result{attach_head(base, hyper.n_classes, seed), 0.0};
  auto& model = result.model;

  std::vector<model::TokenSequence> inputs;
  inputs.reserve(task.train.size());
  for (const auto& item : task.train) {
    inputs.push_back(phaseshift::apply_template(item.tokens, shift, T));
  }

  std::vector<numerics::Tensor> params;
  for (const auto& p : model.parameters()) {
    if (hyper.freeze_positions && p.name == "pos_emb") continue;
    params.push_back(p.tensor);
  }

  model::TrainOptions options;
  options.steps = hyper.steps;
  options.batch_size = hyper.batch_size;
  options.adam.lr = hyper.lr;
  options.clip_norm = hyper.clip_norm;
  options.seed = seed;
  const model::ExampleLoss loss = [&](std::size_t example, std::uint64_t) {
    const std::int32_t target = task.train[example].label;
    return numerics::cross_entropy_logits(classify(model, inputs[example]),
                                          std::span<const std::int32_t>(&target, 1));
  };
  if (hyper.steps > 0) model::train_loop(params, inputs.size(), loss, options);

  result.validation_accuracy = evaluate_accuracy(model, task.validation, shift);
  return result;
}

PhaseMatrix cross_phase_matrix(const Transformer& base, const TaskData& task,
                               const std::vector<std::int32_t>& train_shifts,
                               const std::vector<std::int32_t>& eval_shifts,
                               const std::vector<std::uint64_t>& seeds,
                               const phaseshift::ShiftSpec& base_shift,
                               const FinetuneHyper& hyper, std::size_t threads) {
  if (train_shifts.empty() || eval_shifts.empty() || seeds.empty()) {
    throw UsageError("cross_phase_matrix: empty shift or seed list");
  }
  const std::size_t T = base.config().context_window;
  for (auto k : train_shifts) check_fits(task.train, base_shift.with_k(k), T);
  for (auto k : eval_shifts) check_fits(task.validation, base_shift.with_k(k), T);

  const std::size_t R = train_shifts.size(), C = eval_shifts.size(), S = seeds.size();
  // acc[(r * S + s) * C + c]
  std::vector<double> acc(R * S * C, 0.0);
  parallel_for(R * S, threads, [&](std::size_t cell) {
    const std::size_t r = cell / S, s = cell % S;
    auto tuned = finetune_task(base, task, base_shift.with_k(train_shifts[r]), hyper, seeds[s]);
    for (std::size_t c = 0; c < C; ++c) {
      acc[cell * C + c] =
          evaluate_accuracy(tuned.model, task.validation, base_shift.with_k(eval_shifts[c]));
    }
  });

  PhaseMatrix matrix;
  matrix.task_id = task.task_id;
  matrix.train_shifts = train_shifts;
  matrix.eval_shifts = eval_shifts;
  matrix.seeds = seeds;
  matrix.mean.assign(R, std::vector<double>(C, 0.0));
  matrix.std.assign(R, std::vector<double>(C, 0.0));
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < C; ++c) {
      double mean = 0;
      for (std::size_t s = 0; s < S; ++s) mean += acc[(r * S + s) * C + c];
      mean /= static_cast<double>(S);
      double var = 0;
      for (std::size_t s = 0; s < S; ++s) {
        const double d = acc[(r * S + s) * C + c] - mean;
        var += d * d;
      }
      matrix.mean[r][c] = mean;
      matrix.std[r][c] = std::sqrt(var / static_cast<double>(S));
    }
  }
  return matrix;
}

namespace {

double masked_mean(const PhaseMatrix& m, bool diagonal) {
  double total = 0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < m.train_shifts.size(); ++r) {
    for (std::size_t c = 0; c < m.eval_shifts.size(); ++c) {
      if ((m.train_shifts[r] == m.eval_shifts[c]) != diagonal) continue;
      total += m.mean[r][c];
      ++count;
    }
  }
  if (count == 0) throw UsageError("phase matrix has no such entries");
  return total / static_cast<double>(count);
}

}  // namespace

double diagonal_mean(const PhaseMatrix& matrix) { return masked_mean(matrix, true); }
double off_diagonal_mean(const PhaseMatrix& matrix) { return masked_mean(matrix, false); }

void write_matrix_csv(std::ostream& out, const PhaseMatrix& matrix) {
  write_matrix_csv(out, std::vector<PhaseMatrix>{matrix});
}

void write_matrix_csv(std::ostream& out, const std::vector<PhaseMatrix>& matrices) {
  CsvTable table;
  table.header = {"task_id", "k_train", "k_eval", "mean_acc", "std_acc", "n_seeds"};
  for (const auto& matrix : matrices) {
    for (std::size_t r = 0; r < matrix.train_shifts.size(); ++r) {
      for (std::size_t c = 0; c < matrix.eval_shifts.size(); ++c) {
        table.rows.push_back({matrix.task_id, std::to_string(matrix.train_shifts[r]),
                              std::to_string(matrix.eval_shifts[c]),
                              format_real(matrix.mean[r][c]), format_real(matrix.std[r][c]),
                              std::to_string(matrix.seeds.size())});
      }
    }
  }
  write_csv(out, table);
}

}  // namespace posphase::finetune
