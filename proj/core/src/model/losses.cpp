#include "posphase/model/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "posphase/errors.hpp"
#include "posphase/model/special_tokens.hpp"
#include "posphase/numerics/ops.hpp"

namespace posphase::model {

template <typename Real>
numerics::BasicTensor<Real> causal_lm_loss(const BasicTransformer<Real>& model,
                                           const TokenSequence& seq) {
  const std::size_t n = seq.size();
  if (n < 2) throw UsageError("causal_lm_loss needs at least two tokens");
  std::vector<TokenId> targets(n, kPad);
  std::vector<bool> mask(n, false);
  for (std::size_t t = 0; t + 1 < n; ++t) {
    targets[t] = seq.token_ids[t + 1];
    mask[t] = seq.loss_mask[t + 1];
  }
  auto logits = model.forward(seq).logits;
  return numerics::cross_entropy_logits(logits, std::span<const TokenId>(targets), mask);
}

MaskedSequence mask_for_mlm(const TokenSequence& seq, double mask_rate, std::uint64_t seed) {
  std::vector<std::size_t> content;
  for (std::size_t t = 0; t < seq.size(); ++t) {
    if (!is_special(seq.token_ids[t])) content.push_back(t);
  }
  if (content.empty()) throw EmptyLossError("mlm: sequence has no content tokens");
  const auto count = static_cast<std::size_t>(
      std::ceil(mask_rate * static_cast<double>(content.size()) - 1e-9));
  if (count == 0) throw EmptyLossError("mlm: mask rate selects no tokens");

  std::mt19937_64 rng(seed);
  std::shuffle(content.begin(), content.end(), rng);
  content.resize(std::min(count, content.size()));
  std::sort(content.begin(), content.end());

  MaskedSequence out{seq, content};
  for (std::size_t t : content) out.input.token_ids[t] = kMask;
  return out;
}

template <typename Real>
numerics::BasicTensor<Real> mlm_loss(const BasicTransformer<Real>& model,
                                     const TokenSequence& seq, double mask_rate,
                                     std::uint64_t seed) {
  if (model.config().attention_mode != AttentionMode::kBidirectional) {
    throw UsageError("mlm_loss requires a bidirectional model");
  }
  auto masked = mask_for_mlm(seq, mask_rate, seed);
  std::vector<bool> mask(seq.size(), false);
  for (std::size_t t : masked.masked) mask[t] = true;
  auto logits = model.forward(masked.input).logits;
  return numerics::cross_entropy_logits(logits, std::span<const TokenId>(seq.token_ids), mask);
}

template <typename Real>
numerics::BasicTensor<Real> language_model_loss(const BasicTransformer<Real>& model,
                                                const TokenSequence& seq, double mask_rate,
                                                std::uint64_t seed) {
  if (model.config().attention_mode == AttentionMode::kCausal) return causal_lm_loss(model, seq);
  return mlm_loss(model, seq, mask_rate, seed);
}

#define POSPHASE_INSTANTIATE_LOSSES(Real)                                                    \
  template numerics::BasicTensor<Real> causal_lm_loss(const BasicTransformer<Real>&,         \
                                                      const TokenSequence&);                 \
  template numerics::BasicTensor<Real> mlm_loss(const BasicTransformer<Real>&,               \
                                                const TokenSequence&, double, std::uint64_t); \
  template numerics::BasicTensor<Real> language_model_loss(                                  \
      const BasicTransformer<Real>&, const TokenSequence&, double, std::uint64_t);

POSPHASE_INSTANTIATE_LOSSES(float)
POSPHASE_INSTANTIATE_LOSSES(double)

#undef POSPHASE_INSTANTIATE_LOSSES

}  // namespace posphase::model
