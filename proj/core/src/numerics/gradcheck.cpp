#include "posphase/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "posphase/errors.hpp"

namespace posphase::numerics {

double relative_gradient_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), floor);
}

template <typename Real, typename RefReal>
GradCheckReport compare_with_central_differences(
    const std::vector<NamedTensor<Real>>& analytic,
    std::vector<NamedTensor<RefReal>>& reference,
    const std::function<double()>& reference_loss, const GradCheckOptions& options) {
  if (analytic.size() != reference.size()) {
    throw ShapeError("gradient check: parameter lists differ in length");
  }
  GradCheckReport report;
  std::mt19937_64 rng(options.seed);
  for (std::size_t t = 0; t < analytic.size(); ++t) {
    const auto& a = analytic[t];
    auto& r = reference[t];
    if (a.name != r.name || a.tensor.shape() != r.tensor.shape()) {
      throw ShapeError("gradient check: parameter '" + a.name + "' has no matching reference");
    }
    const std::size_t size = a.tensor.size();
    std::vector<std::size_t> indices(size);
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (size > options.samples_per_tensor) {
      std::shuffle(indices.begin(), indices.end(), rng);
      indices.resize(options.samples_per_tensor);
      std::sort(indices.begin(), indices.end());
    }
    auto grad = a.tensor.has_grad() ? a.tensor.grad() : std::span<const Real>{};
    auto values = r.tensor.mutable_data();
    for (std::size_t idx : indices) {
      const RefReal saved = values[idx];
      const auto loss_at = [&](double offset) {
        values[idx] = static_cast<RefReal>(static_cast<double>(saved) + offset);
        return reference_loss();
      };
      const double h = options.h;
      const double d1 = loss_at(h) - loss_at(-h);
      double numeric = d1 / (2.0 * h);
      if (options.fourth_order) {
        const double d2 = loss_at(2 * h) - loss_at(-2 * h);
        numeric = (8.0 * d1 - d2) / (12.0 * h);
      }
      values[idx] = saved;

      const double analytic_value = grad.empty() ? 0.0 : static_cast<double>(grad[idx]);
      const double err = relative_gradient_error(analytic_value, numeric, options.denominator_floor);
      ++report.entries_checked;
      if (err > report.max_relative_error || report.entries_checked == 1) {
        report.max_relative_error = err;
        report.worst_parameter = a.name;
        report.worst_index = idx;
        report.worst_analytic = analytic_value;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

template <typename Real>
GradCheckReport finite_diff_check(const std::function<BasicTensor<Real>()>& loss_fn,
                                  std::vector<NamedTensor<Real>>& params,
                                  const GradCheckOptions& options) {
  for (auto& p : params) p.tensor.zero_grad();
  backward(loss_fn());
  const auto evaluate = [&loss_fn] {
    NoGradGuard guard;
    return static_cast<double>(loss_fn().item());
  };
  return compare_with_central_differences<Real, Real>(params, params, evaluate, options);
}

template GradCheckReport compare_with_central_differences<float, float>(
    const std::vector<NamedTensor<float>>&, std::vector<NamedTensor<float>>&,
    const std::function<double()>&, const GradCheckOptions&);
template GradCheckReport compare_with_central_differences<float, double>(
    const std::vector<NamedTensor<float>>&, std::vector<NamedTensor<double>>&,
    const std::function<double()>&, const GradCheckOptions&);
template GradCheckReport compare_with_central_differences<double, double>(
    const std::vector<NamedTensor<double>>&, std::vector<NamedTensor<double>>&,
    const std::function<double()>&, const GradCheckOptions&);
template GradCheckReport finite_diff_check(const std::function<BasicTensor<float>()>&,
                                           std::vector<NamedTensor<float>>&,
                                           const GradCheckOptions&);
template GradCheckReport finite_diff_check(const std::function<BasicTensor<double>()>&,
                                           std::vector<NamedTensor<double>>&,
                                           const GradCheckOptions&);

}  // namespace posphase::numerics
