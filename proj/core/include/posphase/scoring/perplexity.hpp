#pragma once

#include <functional>

#include "posphase/model/transformer.hpp"

namespace posphase::scoring {

using model::TokenSequence;
using model::Transformer;

// Sentence perplexity; lower means more acceptable.
using Scorer = std::function<double(const TokenSequence&)>;

// exp(mean NLL) of the loss_mask positions predicted left-to-right. Position
// 0 is never predicted. EmptyLossError if nothing is predicted.
double causal_ppl(const Transformer& model, const TokenSequence& seq);

// Pseudo-perplexity: each loss_mask position is replaced by MASK in turn, the
// rest left intact; returns exp(−Σ log P(w_t | rest) / n_content).
double pseudo_ppl(const Transformer& model, const TokenSequence& seq);

// causal_ppl for causal models, pseudo_ppl for bidirectional ones.
double perplexity(const Transformer& model, const TokenSequence& seq);

Scorer model_scorer(const Transformer& model);

}  // namespace posphase::scoring
