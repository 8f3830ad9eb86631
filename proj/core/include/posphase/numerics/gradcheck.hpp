#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "posphase/numerics/tensor.hpp"

namespace posphase::numerics {

struct GradCheckOptions {
  double h = 1e-3;
  // Entries sampled per parameter tensor; tensors at or below this size are
  // checked exhaustively.
  std::size_t samples_per_tensor = 16;
  std::uint64_t seed = 0;
  // Lower bound on the error denominator. Near-zero entries (including
  // structurally zero ones) are then judged by absolute error instead of
  // amplifying finite-difference round-off into O(1) relative error.
  double denominator_floor = 1e-4;
  // Five-point stencil: truncation error O(h^4) instead of O(h^2), for
  // directions where the loss has large third derivatives.
  bool fourth_order = false;
};

struct GradCheckReport {
  double max_relative_error = 0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0;
  double worst_numeric = 0;
  std::size_t entries_checked = 0;
};

// |analytic − numeric| / max(|analytic| + |numeric|, floor)
double relative_gradient_error(double analytic, double numeric, double floor = 1e-12);

// Compares already-accumulated gradients of `analytic` against central
// differences of `reference_loss`, perturbing the matching entries of
// `reference` in place (and restoring them). Both lists must have identical
// names and shapes; the reference may use a different precision.
template <typename Real, typename RefReal>
GradCheckReport compare_with_central_differences(
    const std::vector<NamedTensor<Real>>& analytic,
    std::vector<NamedTensor<RefReal>>& reference,
    const std::function<double()>& reference_loss, const GradCheckOptions& options);

// Same-precision check: zeroes the gradients of `params`, runs backward on
// loss_fn(), then compares against central differences of loss_fn().
template <typename Real>
GradCheckReport finite_diff_check(const std::function<BasicTensor<Real>()>& loss_fn,
                                  std::vector<NamedTensor<Real>>& params,
                                  const GradCheckOptions& options);

}  // namespace posphase::numerics
