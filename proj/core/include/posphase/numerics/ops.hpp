#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "posphase/numerics/tensor.hpp"

namespace posphase::numerics {

// Differentiable primitives. Matrix operands are rank-2 row-major; "rows" of
// a higher-rank tensor are its last-dimension vectors. There is no general
// broadcasting: add_rowwise and the affine terms of layer_norm/linear are the
// only expanding patterns.

template <typename Real>
BasicTensor<Real> matmul(const BasicTensor<Real>& a, const BasicTensor<Real>& b);

// a · bᵀ, with a: m×k and b: n×k.
template <typename Real>
BasicTensor<Real> matmul_transposed(const BasicTensor<Real>& a,
                                    const BasicTensor<Real>& b);

// x·w + bias, with x: n×in, w: in×out, bias: out (may be undefined).
template <typename Real>
BasicTensor<Real> linear(const BasicTensor<Real>& x, const BasicTensor<Real>& w,
                         const BasicTensor<Real>& bias);

template <typename Real>
BasicTensor<Real> add(const BasicTensor<Real>& a, const BasicTensor<Real>& b);

// Adds the vector b to every row of a.
template <typename Real>
BasicTensor<Real> add_rowwise(const BasicTensor<Real>& a, const BasicTensor<Real>& b);

template <typename Real>
BasicTensor<Real> mul(const BasicTensor<Real>& a, const BasicTensor<Real>& b);

template <typename Real>
BasicTensor<Real> scale(const BasicTensor<Real>& a, Real factor);

template <typename Real>
BasicTensor<Real> sum(const BasicTensor<Real>& a);

// Tanh approximation of GELU.
template <typename Real>
BasicTensor<Real> gelu(const BasicTensor<Real>& a);

template <typename Real>
BasicTensor<Real> layer_norm(const BasicTensor<Real>& x, const BasicTensor<Real>& gain,
                             const BasicTensor<Real>& bias, Real eps = Real(1e-5));

// Row-wise softmax with max subtraction.
template <typename Real>
BasicTensor<Real> softmax_rows(const BasicTensor<Real>& m);

// Stacks table rows selected by ids into an ids.size()×d tensor. Throws
// RangeError for an id outside the table.
template <typename Real>
BasicTensor<Real> gather_rows(const BasicTensor<Real>& table,
                              std::span<const std::int32_t> ids);

// Mean natural-log NLL over rows whose mask entry is true (empty mask means
// every row). Throws EmptyLossError when no row contributes.
template <typename Real>
BasicTensor<Real> cross_entropy_logits(const BasicTensor<Real>& logits,
                                       std::span<const std::int32_t> targets,
                                       const std::vector<bool>& mask = {});

// log softmax(row)[target], evaluated in double. Not differentiable.
template <typename Real>
double log_prob(std::span<const Real> logits_row, std::int32_t target);

template <typename Real>
struct AttentionOptions {
  std::size_t heads = 1;
  bool causal = false;
  // Optional additive bias table of shape (2·max_distance+1)×heads, indexed
  // by clip(p_query − p_key, ±max_distance). Requires `positions`.
  BasicTensor<Real> relative_bias;
  std::span<const std::int32_t> positions;
  std::int32_t max_distance = 0;
};

// Scaled dot-product attention over a packed n×3d [Q | K | V] input; returns
// n×d. If `probabilities` is non-null it receives the heads×n×n weights.
template <typename Real>
BasicTensor<Real> multi_head_attention(const BasicTensor<Real>& qkv,
                                       const AttentionOptions<Real>& options,
                                       std::vector<Real>* probabilities = nullptr);

}  // namespace posphase::numerics
