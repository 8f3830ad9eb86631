#include "posphase/model/transformer.hpp"

#include <cmath>
#include <cstring>
#include <random>

#include "posphase/errors.hpp"
#include "posphase/numerics/ops.hpp"

namespace posphase::model {

namespace {

using numerics::Shape;

struct ExpectedParameter {
  std::string name;
  Shape shape;
  enum class Init { kNormal, kOnes, kZeros } init;
};

std::vector<ExpectedParameter> expected_parameters(const ModelConfig& c) {
  using Init = ExpectedParameter::Init;
  const std::size_t d = c.d_model;
  const std::size_t hidden = d * c.mlp_mult;
  std::vector<ExpectedParameter> out;
  out.push_back({"tok_emb", {c.vocab_size, d}, Init::kNormal});
  if (c.pe_scheme == PeScheme::kLearnedApe) {
    out.push_back({"pos_emb", {c.context_window, d}, Init::kNormal});
  }
  if (c.pe_scheme == PeScheme::kRelative) {
    out.push_back({"rel_bias",
                   {static_cast<std::size_t>(2 * c.rel_max_distance + 1), c.n_heads},
                   Init::kNormal});
  }
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    out.push_back({p + "ln1.gain", {d}, Init::kOnes});
    out.push_back({p + "ln1.bias", {d}, Init::kZeros});
    out.push_back({p + "attn.qkv.weight", {d, 3 * d}, Init::kNormal});
    out.push_back({p + "attn.qkv.bias", {3 * d}, Init::kZeros});
    out.push_back({p + "attn.out.weight", {d, d}, Init::kNormal});
    out.push_back({p + "attn.out.bias", {d}, Init::kZeros});
    out.push_back({p + "ln2.gain", {d}, Init::kOnes});
    out.push_back({p + "ln2.bias", {d}, Init::kZeros});
    out.push_back({p + "mlp.fc.weight", {d, hidden}, Init::kNormal});
    out.push_back({p + "mlp.fc.bias", {hidden}, Init::kZeros});
    out.push_back({p + "mlp.proj.weight", {hidden, d}, Init::kNormal});
    out.push_back({p + "mlp.proj.bias", {d}, Init::kZeros});
  }
  out.push_back({"ln_f.gain", {d}, Init::kOnes});
  out.push_back({"ln_f.bias", {d}, Init::kZeros});
  return out;
}

std::string layer_key(std::size_t layer, const char* suffix) {
  return "layers." + std::to_string(layer) + "." + suffix;
}

}  // namespace

std::vector<double> sinusoidal_positions(std::size_t context_window, std::size_t d_model) {
  std::vector<double> table(context_window * d_model);
  for (std::size_t pos = 0; pos < context_window; ++pos) {
    for (std::size_t i = 0; 2 * i < d_model; ++i) {
      const double angle =
          static_cast<double>(pos) /
          std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(d_model));
      table[pos * d_model + 2 * i] = std::sin(angle);
      if (2 * i + 1 < d_model) table[pos * d_model + 2 * i + 1] = std::cos(angle);
    }
  }
  return table;
}

template <typename Real>
BasicTransformer<Real>::BasicTransformer(ModelConfig config, std::vector<Parameter> parameters)
    : config_(config), parameters_(std::move(parameters)) {
  config_.validate();
  check_structure();
  if (config_.pe_scheme == PeScheme::kSinusoidal) {
    auto table = sinusoidal_positions(config_.context_window, config_.d_model);
    std::vector<Real> data(table.begin(), table.end());
    sinusoidal_ = Tensor::from_data({config_.context_window, config_.d_model}, std::move(data));
  }
}

template <typename Real>
void BasicTransformer<Real>::check_structure() const {
  for (const auto& e : expected_parameters(config_)) {
    const Parameter* p = find(e.name);
    if (!p) throw ConfigError(e.name, "missing parameter");
    if (p->tensor.shape() != e.shape) {
      throw ConfigError(e.name, "expected shape " + numerics::shape_string(e.shape) +
                                    ", got " + numerics::shape_string(p->tensor.shape()));
    }
  }
  if (config_.pe_scheme != PeScheme::kLearnedApe && find("pos_emb")) {
    throw ConfigError("pos_emb", "position table present for a non-learned scheme");
  }
  if (config_.pe_scheme != PeScheme::kRelative && find("rel_bias")) {
    throw ConfigError("rel_bias", "relative bias present for a non-relative scheme");
  }
}

template <typename Real>
const typename BasicTransformer<Real>::Parameter* BasicTransformer<Real>::find(
    std::string_view name) const {
  for (const auto& p : parameters_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

template <typename Real>
std::vector<typename BasicTransformer<Real>::Tensor> BasicTransformer<Real>::parameter_tensors()
    const {
  std::vector<Tensor> out;
  out.reserve(parameters_.size());
  for (const auto& p : parameters_) out.push_back(p.tensor);
  return out;
}

template <typename Real>
bool BasicTransformer<Real>::has_parameter(std::string_view name) const {
  return find(name) != nullptr;
}

template <typename Real>
const typename BasicTransformer<Real>::Tensor& BasicTransformer<Real>::parameter(
    std::string_view name) const {
  const Parameter* p = find(name);
  if (!p) throw UsageError("no parameter named '" + std::string(name) + "'");
  return p->tensor;
}

template <typename Real>
typename BasicTransformer<Real>::Tensor& BasicTransformer<Real>::parameter(std::string_view name) {
  return const_cast<Tensor&>(std::as_const(*this).parameter(name));
}

template <typename Real>
void BasicTransformer<Real>::add_parameter(std::string name, Tensor tensor) {
  if (find(name)) throw UsageError("parameter '" + name + "' already exists");
  parameters_.push_back({std::move(name), std::move(tensor)});
}

template <typename Real>
BasicTransformer<Real> BasicTransformer<Real>::clone() const {
  std::vector<Parameter> copied;
  copied.reserve(parameters_.size());
  for (const auto& p : parameters_) copied.push_back({p.name, p.tensor.clone()});
  return BasicTransformer(config_, std::move(copied));
}

template <typename Real>
std::uint64_t BasicTransformer<Real>::fingerprint() const {
  std::uint64_t hash = 1469598103934665603ull;
  auto mix = [&hash](const void* bytes, std::size_t count) {
    const auto* b = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < count; ++i) {
      hash ^= b[i];
      hash *= 1099511628211ull;
    }
  };
  for (const auto& p : parameters_) {
    mix(p.name.data(), p.name.size());
    for (std::size_t d : p.tensor.shape()) mix(&d, sizeof d);
    auto data = p.tensor.data();
    mix(data.data(), data.size_bytes());
  }
  return hash;
}

template <typename Real>
typename BasicTransformer<Real>::Tensor BasicTransformer<Real>::embed(
    const TokenSequence& seq) const {
  seq.validate(config_.vocab_size, config_.context_window);
  Tensor x = numerics::gather_rows(parameter("tok_emb"), std::span(seq.token_ids));
  switch (config_.pe_scheme) {
    case PeScheme::kLearnedApe:
      return numerics::add(x, numerics::gather_rows(parameter("pos_emb"),
                                                    std::span(seq.position_ids)));
    case PeScheme::kSinusoidal:
      return numerics::add(x, numerics::gather_rows(sinusoidal_, std::span(seq.position_ids)));
    case PeScheme::kRelative:
    case PeScheme::kNone:
      break;
  }
  return x;
}

template <typename Real>
typename BasicTransformer<Real>::Tensor BasicTransformer<Real>::hidden_states(
    const TokenSequence& seq, AttentionCapture* capture) const {
  Tensor x = embed(seq);
  numerics::AttentionOptions<Real> options;
  options.heads = config_.n_heads;
  options.causal = config_.attention_mode == AttentionMode::kCausal;
  if (config_.pe_scheme == PeScheme::kRelative) {
    options.relative_bias = parameter("rel_bias");
    options.positions = std::span(seq.position_ids);
    options.max_distance = config_.rel_max_distance;
  }
  if (capture) {
    capture->n = seq.size();
    capture->heads = config_.n_heads;
    capture->layers.clear();
  }

  std::vector<Real> probs;
  for (std::size_t l = 0; l < config_.n_layers; ++l) {
    Tensor h = numerics::layer_norm(x, parameter(layer_key(l, "ln1.gain")),
                                    parameter(layer_key(l, "ln1.bias")));
    Tensor qkv = numerics::linear(h, parameter(layer_key(l, "attn.qkv.weight")),
                                  parameter(layer_key(l, "attn.qkv.bias")));
    Tensor attended =
        numerics::multi_head_attention(qkv, options, capture ? &probs : nullptr);
    if (capture) capture->layers.emplace_back(probs.begin(), probs.end());
    x = numerics::add(x, numerics::linear(attended, parameter(layer_key(l, "attn.out.weight")),
                                          parameter(layer_key(l, "attn.out.bias"))));

    Tensor h2 = numerics::layer_norm(x, parameter(layer_key(l, "ln2.gain")),
                                     parameter(layer_key(l, "ln2.bias")));
    Tensor fc = numerics::gelu(numerics::linear(h2, parameter(layer_key(l, "mlp.fc.weight")),
                                                parameter(layer_key(l, "mlp.fc.bias"))));
    x = numerics::add(x, numerics::linear(fc, parameter(layer_key(l, "mlp.proj.weight")),
                                          parameter(layer_key(l, "mlp.proj.bias"))));
  }
  return numerics::layer_norm(x, parameter("ln_f.gain"), parameter("ln_f.bias"));
}

template <typename Real>
ForwardResult<Real> BasicTransformer<Real>::forward(const TokenSequence& seq,
                                                    bool capture_attention) const {
  ForwardResult<Real> result;
  Tensor hidden = hidden_states(seq, capture_attention ? &result.attention : nullptr);
  result.logits = numerics::matmul_transposed(hidden, parameter("tok_emb"));
  return result;
}

template <typename Real>
BasicTransformer<Real> build_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.02);
  std::vector<numerics::NamedTensor<Real>> params;
  for (const auto& e : expected_parameters(config)) {
    std::vector<Real> data(numerics::shape_size(e.shape));
    switch (e.init) {
      case ExpectedParameter::Init::kNormal:
        for (auto& v : data) v = static_cast<Real>(normal(rng));
        break;
      case ExpectedParameter::Init::kOnes:
        std::fill(data.begin(), data.end(), Real{1});
        break;
      case ExpectedParameter::Init::kZeros:
        break;
    }
    params.push_back({e.name, numerics::BasicTensor<Real>::from_data(e.shape, std::move(data),
                                                                     /*requires_grad=*/true)});
  }
  return BasicTransformer<Real>(config, std::move(params));
}

template class BasicTransformer<float>;
template class BasicTransformer<double>;
template BasicTransformer<float> build_model<float>(const ModelConfig&, std::uint64_t);
template BasicTransformer<double> build_model<double>(const ModelConfig&, std::uint64_t);

}  // namespace posphase::model
