#include "posphase/scoring/perplexity.hpp"

#include <cmath>

#include "posphase/errors.hpp"
#include "posphase/model/special_tokens.hpp"
#include "posphase/numerics/ops.hpp"

namespace posphase::scoring {

double causal_ppl(const Transformer& model, const TokenSequence& seq) {
  if (seq.size() < 2) throw UsageError("causal_ppl needs at least two tokens");
  numerics::NoGradGuard guard;
  const auto logits = model.forward(seq).logits;
  const std::size_t vocab = logits.cols();
  auto data = logits.data();
  double nll = 0;
  std::size_t count = 0;
  for (std::size_t t = 1; t < seq.size(); ++t) {
    if (!seq.loss_mask[t]) continue;
    nll -= numerics::log_prob(data.subspan((t - 1) * vocab, vocab), seq.token_ids[t]);
    ++count;
  }
  if (count == 0) throw EmptyLossError("causal_ppl: no content tokens to predict");
  return std::exp(nll / static_cast<double>(count));
}

double pseudo_ppl(const Transformer& model, const TokenSequence& seq) {
  numerics::NoGradGuard guard;
  double nll = 0;
  std::size_t count = 0;
  TokenSequence masked = seq;
  for (std::size_t t = 0; t < seq.size(); ++t) {
    if (!seq.loss_mask[t]) continue;
    masked.token_ids[t] = model::kMask;
    const auto logits = model.forward(masked).logits;
    const std::size_t vocab = logits.cols();
    nll -= numerics::log_prob(logits.data().subspan(t * vocab, vocab), seq.token_ids[t]);
    masked.token_ids[t] = seq.token_ids[t];
    ++count;
  }
  if (count == 0) throw EmptyLossError("pseudo_ppl: no content tokens to score");
  return std::exp(nll / static_cast<double>(count));
}

double perplexity(const Transformer& model, const TokenSequence& seq) {
  return model.config().attention_mode == model::AttentionMode::kCausal ? causal_ppl(model, seq)
                                                                         : pseudo_ppl(model, seq);
}

Scorer model_scorer(const Transformer& model) {
  return [&model](const TokenSequence& seq) { return perplexity(model, seq); };
}

}  // namespace posphase::scoring
