#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "posphase/numerics/tensor.hpp"

namespace posphase::numerics {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moment buffers are allocated lazily on the first step, zero-initialized.
template <typename Real>
struct AdamState {
  AdamHyper hyper;
  std::uint64_t step = 0;
  std::vector<std::vector<Real>> m;
  std::vector<std::vector<Real>> v;
};

// One bias-corrected Adam update (no weight decay) using each parameter's
// accumulated gradient; a parameter without a gradient buffer is treated as
// having a zero gradient. Throws ShapeError if the parameter list no longer
// matches the state, NumericError if an update yields a non-finite value.
template <typename Real>
void adam_step(std::span<BasicTensor<Real>> params, AdamState<Real>& state);

// Rescales gradients so that their global L2 norm is at most max_norm.
// Returns the norm before clipping.
template <typename Real>
double clip_grad_norm(std::span<BasicTensor<Real>> params, double max_norm);

template <typename Real>
void zero_grads(std::span<BasicTensor<Real>> params);

}  // namespace posphase::numerics
