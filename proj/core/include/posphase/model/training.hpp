#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "posphase/model/transformer.hpp"
#include "posphase/numerics/adam.hpp"
#include "posphase/numerics/gradcheck.hpp"

namespace posphase::model {

struct TrainOptions {
  std::size_t steps = 1000;
  std::size_t batch_size = 32;
  numerics::AdamHyper adam{};
  // Global gradient-norm clip; <= 0 disables clipping.
  double clip_norm = 1.0;
  double mask_rate = 0.15;
  std::uint64_t seed = 0;
  std::size_t log_every = 50;
  // If set, consulted every eval_every steps; returning true stops training.
  std::size_t eval_every = 0;
  std::function<bool(std::size_t step)> should_stop;
};

struct TrainReport {
  std::size_t steps_run = 0;
  bool stopped_early = false;
  std::vector<std::pair<std::size_t, double>> loss_log;  // (step, mean batch loss)
};

// Loss for one example; `draw` is a per-(step, slot) seed for any stochastic
// corruption the loss applies.
using ExampleLoss = std::function<numerics::Tensor(std::size_t example, std::uint64_t draw)>;

// Minibatch Adam over `params`. Examples are visited in seeded per-epoch
// shuffles; gradients of one batch are accumulated per example and averaged.
TrainReport train_loop(std::span<numerics::Tensor> params, std::size_t n_examples,
                       const ExampleLoss& loss, const TrainOptions& options);

// Causal next-token or masked-LM training depending on the attention mode.
TrainReport train_language_model(Transformer& model, std::span<const TokenSequence> corpus,
                                 const TrainOptions& options);

// Gradient check of the language-model loss averaged over `batch`. The
// analytic side runs at the model's precision; the central differences are
// always evaluated on a 64-bit copy of the same weights.
template <typename Real>
numerics::GradCheckReport check_model_gradients(const BasicTransformer<Real>& model,
                                                std::span<const TokenSequence> batch,
                                                const numerics::GradCheckOptions& options,
                                                double mask_rate = 0.15,
                                                std::uint64_t mask_seed = 0);

}  // namespace posphase::model
