#include "posphase/numerics/adam.hpp"

#include <cmath>

#include "posphase/errors.hpp"

namespace posphase::numerics {

template <typename Real>
void adam_step(std::span<BasicTensor<Real>> params, AdamState<Real>& state) {
  if (state.step == 0 && state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), Real{0});
      state.v.emplace_back(p.size(), Real{0});
    }
  }
  if (state.m.size() != params.size()) {
    throw ShapeError("adam_step: parameter count changed since the first step");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i].size()) {
      throw ShapeError("adam_step: parameter " + std::to_string(i) + " changed size");
    }
  }

  ++state.step;
  const auto& h = state.hyper;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  const Real b1 = static_cast<Real>(h.beta1);
  const Real b2 = static_cast<Real>(h.beta2);
  const Real step_size = static_cast<Real>(h.lr / correction1);
  const Real sqrt_c2 = static_cast<Real>(std::sqrt(correction2));
  const Real eps = static_cast<Real>(h.eps);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.has_grad()) {
      // Zero gradient: moments only decay.
      for (auto& x : state.m[i]) x *= b1;
      for (auto& x : state.v[i]) x *= b2;
    }
    auto g = p.has_grad() ? p.grad() : std::span<const Real>{};
    auto w = p.mutable_data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (!g.empty()) {
        m[j] = b1 * m[j] + (Real(1) - b1) * g[j];
        v[j] = b2 * v[j] + (Real(1) - b2) * g[j] * g[j];
      }
      if (m[j] == Real{0}) continue;
      w[j] -= step_size * m[j] / (std::sqrt(v[j]) / sqrt_c2 + eps);
      if (!std::isfinite(w[j])) {
        throw NumericError("adam_step: non-finite parameter after update");
      }
    }
  }
}

template <typename Real>
double clip_grad_norm(std::span<BasicTensor<Real>> params, double max_norm) {
  double sq = 0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (Real g : p.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    const Real factor = static_cast<Real>(max_norm / norm);
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (auto& g : p.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

template <typename Real>
void zero_grads(std::span<BasicTensor<Real>> params) {
  for (auto& p : params) p.zero_grad();
}

template void adam_step(std::span<BasicTensor<float>>, AdamState<float>&);
template void adam_step(std::span<BasicTensor<double>>, AdamState<double>&);
template double clip_grad_norm(std::span<BasicTensor<float>>, double);
template double clip_grad_norm(std::span<BasicTensor<double>>, double);
template void zero_grads(std::span<BasicTensor<float>>);
template void zero_grads(std::span<BasicTensor<double>>);

}  // namespace posphase::numerics
