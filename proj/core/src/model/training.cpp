#include "posphase/model/training.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "posphase/errors.hpp"
#include "posphase/model/losses.hpp"
#include "posphase/numerics/ops.hpp"

namespace posphase::model {

TrainReport train_loop(std::span<numerics::Tensor> params, std::size_t n_examples,
                       const ExampleLoss& loss, const TrainOptions& options) {
  if (n_examples == 0) throw UsageError("train_loop: no training examples");
  if (options.batch_size == 0) throw ConfigError("batch_size", "must be positive");

  TrainReport report;
  numerics::AdamState<float> state;
  state.hyper = options.adam;
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(n_examples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;

  const float inv_batch = 1.0f / static_cast<float>(options.batch_size);
  for (std::size_t step = 1; step <= options.steps; ++step) {
    numerics::zero_grads(params);
    double batch_loss = 0;
    for (std::size_t slot = 0; slot < options.batch_size; ++slot) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const std::size_t example = order[cursor++];
      const std::uint64_t draw = options.seed * 0x9E3779B97F4A7C15ull + step * 1315423911ull + slot;
      auto l = loss(example, draw);
      batch_loss += l.item();
      numerics::backward(numerics::scale(l, inv_batch));
    }
    if (options.clip_norm > 0) numerics::clip_grad_norm(params, options.clip_norm);
    numerics::adam_step(params, state);
    report.steps_run = step;

    batch_loss /= static_cast<double>(options.batch_size);
    if (step == 1 || (options.log_every && step % options.log_every == 0) ||
        step == options.steps) {
      report.loss_log.emplace_back(step, batch_loss);
    }
    if (options.eval_every && options.should_stop && step % options.eval_every == 0 &&
        options.should_stop(step)) {
      report.stopped_early = true;
      if (report.loss_log.empty() || report.loss_log.back().first != step) {
        report.loss_log.emplace_back(step, batch_loss);
      }
      break;
    }
  }
  return report;
}

TrainReport train_language_model(Transformer& model, std::span<const TokenSequence> corpus,
                                 const TrainOptions& options) {
  auto params = model.parameter_tensors();
  const ExampleLoss loss = [&](std::size_t example, std::uint64_t draw) {
    return language_model_loss(model, corpus[example], options.mask_rate, draw);
  };
  return train_loop(params, corpus.size(), loss, options);
}

template <typename Real>
numerics::GradCheckReport check_model_gradients(const BasicTransformer<Real>& model,
                                                std::span<const TokenSequence> batch,
                                                const numerics::GradCheckOptions& options,
                                                double mask_rate, std::uint64_t mask_seed) {
  if (batch.empty()) throw UsageError("check_model_gradients: empty batch");
  auto analytic = model.clone();
  for (auto& p : analytic.parameters()) p.tensor.zero_grad();
  const Real inv = Real(1) / static_cast<Real>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto l = language_model_loss(analytic, batch[i], mask_rate, mask_seed + i);
    numerics::backward(numerics::scale(l, inv));
  }

  auto reference = model.template cast<double>();
  const auto reference_loss = [&] {
    numerics::NoGradGuard guard;
    double total = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      total += language_model_loss(reference, batch[i], mask_rate, mask_seed + i).item();
    }
    return total / static_cast<double>(batch.size());
  };
  return numerics::compare_with_central_differences<Real, double>(
      analytic.parameters(), reference.parameters(), reference_loss, options);
}

template numerics::GradCheckReport check_model_gradients(
    const BasicTransformer<float>&, std::span<const TokenSequence>,
    const numerics::GradCheckOptions&, double, std::uint64_t);
template numerics::GradCheckReport check_model_gradients(
    const BasicTransformer<double>&, std::span<const TokenSequence>,
    const numerics::GradCheckOptions&, double, std::uint64_t);

}  // namespace posphase::model
