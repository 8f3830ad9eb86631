#pragma once

#include <cstdint>
#include <vector>

#include "posphase/model/transformer.hpp"

namespace posphase::model {

// Next-token cross entropy: logits at t predict token t+1 wherever
// loss_mask[t+1] holds. UsageError if n < 2, EmptyLossError if no target is
// unmasked.
template <typename Real>
numerics::BasicTensor<Real> causal_lm_loss(const BasicTransformer<Real>& model,
                                           const TokenSequence& seq);

struct MaskedSequence {
  TokenSequence input;                // selected positions replaced by MASK
  std::vector<std::size_t> masked;    // ascending
};

// Picks ceil(mask_rate · n_content) non-special positions by a seeded shuffle.
// EmptyLossError if nothing would be masked.
MaskedSequence mask_for_mlm(const TokenSequence& seq, double mask_rate, std::uint64_t seed);

// Cross entropy at the masked positions only; bidirectional models only.
template <typename Real>
numerics::BasicTensor<Real> mlm_loss(const BasicTransformer<Real>& model,
                                     const TokenSequence& seq, double mask_rate,
                                     std::uint64_t seed);

// The pretraining objective implied by the model's attention mode.
template <typename Real>
numerics::BasicTensor<Real> language_model_loss(const BasicTransformer<Real>& model,
                                                const TokenSequence& seq, double mask_rate,
                                                std::uint64_t seed);

}  // namespace posphase::model
