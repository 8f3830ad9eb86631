#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "posphase/model/config.hpp"
#include "posphase/model/token_sequence.hpp"
#include "posphase/numerics/tensor.hpp"

namespace posphase::model {

// Row-normalized attention weights for every layer and head of one forward
// pass, stored as layers × heads × n × n.
struct AttentionCapture {
  std::size_t n = 0;
  std::size_t heads = 0;
  std::vector<std::vector<double>> layers;

  std::span<const double> matrix(std::size_t layer, std::size_t head) const {
    return std::span<const double>(layers.at(layer)).subspan(head * n * n, n * n);
  }
};

template <typename Real>
struct ForwardResult {
  numerics::BasicTensor<Real> logits;  // n × vocab
  AttentionCapture attention;          // empty unless captured
};

// Pre-norm transformer whose positional signal comes from explicit position
// ids. The output projection is tied to the token embedding table.
//
// Parameter names: tok_emb, pos_emb (learned_ape only), rel_bias (relative
// only, shared by all layers), layers.<i>.{ln1,ln2}.{gain,bias},
// layers.<i>.attn.{qkv,out}.{weight,bias}, layers.<i>.mlp.{fc,proj}.{weight,bias},
// ln_f.{gain,bias}, plus any extra parameters such as a classifier head.
template <typename Real>
class BasicTransformer {
 public:
  using Tensor = numerics::BasicTensor<Real>;
  using Parameter = numerics::NamedTensor<Real>;

  // Throws ConfigError if a required parameter is missing, has the wrong
  // shape, or is present when the scheme forbids it.
  BasicTransformer(ModelConfig config, std::vector<Parameter> parameters);

  const ModelConfig& config() const { return config_; }

  const std::vector<Parameter>& parameters() const { return parameters_; }
  std::vector<Parameter>& parameters() { return parameters_; }
  std::vector<Tensor> parameter_tensors() const;
  bool has_parameter(std::string_view name) const;
  const Tensor& parameter(std::string_view name) const;
  Tensor& parameter(std::string_view name);
  void add_parameter(std::string name, Tensor tensor);

  // Fixed sin/cos table (context_window × d_model), defined iff sinusoidal.
  const Tensor& sinusoidal_table() const { return sinusoidal_; }

  // Deep copy with independent storage.
  BasicTransformer clone() const;

  template <typename Other>
  BasicTransformer<Other> cast() const {
    std::vector<numerics::NamedTensor<Other>> converted;
    converted.reserve(parameters_.size());
    for (const auto& p : parameters_) {
      converted.push_back({p.name, p.tensor.template cast<Other>()});
    }
    return BasicTransformer<Other>(config_, std::move(converted));
  }

  // FNV-1a over parameter names, shapes and raw bytes.
  std::uint64_t fingerprint() const;

  // x_t = tok_emb[w_t] (+ pos_emb[p_t] or the sinusoidal row for absolute schemes).
  Tensor embed(const TokenSequence& seq) const;

  // Final layer-normed hidden states, n × d_model.
  Tensor hidden_states(const TokenSequence& seq, AttentionCapture* capture = nullptr) const;

  ForwardResult<Real> forward(const TokenSequence& seq, bool capture_attention = false) const;

 private:
  const Parameter* find(std::string_view name) const;
  void check_structure() const;

  ModelConfig config_;
  std::vector<Parameter> parameters_;
  Tensor sinusoidal_;
};

using Transformer = BasicTransformer<float>;
using Transformer64 = BasicTransformer<double>;

// Deterministic initialization: learned tables and projection weights drawn
// from Normal(0, 0.02²), layer-norm gains one, biases zero.
template <typename Real = float>
BasicTransformer<Real> build_model(const ModelConfig& config, std::uint64_t seed);

// PE[pos][2i] = sin(pos / 10000^(2i/d)), PE[pos][2i+1] = cos(same).
std::vector<double> sinusoidal_positions(std::size_t context_window, std::size_t d_model);

}  // namespace posphase::model
