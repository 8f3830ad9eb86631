#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace posphase::numerics {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

template <typename Real>
struct TensorNode {
  Shape shape;
  std::vector<Real> data;
  std::vector<Real> grad;
  bool requires_grad = false;
  bool leaf = true;
  const char* op = "leaf";
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(std::span<const Real>)> backward;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), Real{0});
  }
};

}  // namespace detail

// Disables graph recording on the current thread for its lifetime. Results
// built under a guard are constants even when their inputs require grad.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Dense row-major array with an optional gradient buffer. Copies share the
// underlying storage; use clone() for an independent leaf.
template <typename Real>
class BasicTensor {
 public:
  using value_type = Real;
  using Node = detail::TensorNode<Real>;
  using BackwardFn = std::function<void(std::span<const Real> out_grad)>;

  BasicTensor() = default;

  static BasicTensor zeros(Shape shape, bool requires_grad = false);
  static BasicTensor full(Shape shape, Real value, bool requires_grad = false);
  static BasicTensor from_data(Shape shape, std::vector<Real> data,
                               bool requires_grad = false);
  static BasicTensor scalar(Real value, bool requires_grad = false);

  // Result of a differentiable operation. `backward` receives the gradient
  // flowing into the result and accumulates into whichever parents require
  // grad. Throws NumericError if `data` holds NaN or Inf.
  static BasicTensor make_result(const char* op, Shape shape,
                                 std::vector<Real> data,
                                 std::initializer_list<BasicTensor> parents,
                                 BackwardFn backward);

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;
  // Last dimension, and the product of the others.
  std::size_t cols() const;
  std::size_t rows() const;

  std::span<const Real> data() const;
  std::span<Real> mutable_data();
  Real item() const;
  Real at(std::size_t row, std::size_t col) const;

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool is_leaf() const;
  const char* op_name() const;

  bool has_grad() const;
  std::span<const Real> grad() const;
  // Handles share one node, so gradient writes go through const handles.
  // Allocates a zeroed buffer on first use.
  std::span<Real> mutable_grad() const;
  void accumulate_grad(std::span<const Real> delta) const;
  void zero_grad();

  BasicTensor clone() const;

  template <typename Other>
  BasicTensor<Other> cast() const {
    std::vector<Other> converted(size());
    auto src = data();
    for (std::size_t i = 0; i < converted.size(); ++i) {
      converted[i] = static_cast<Other>(src[i]);
    }
    return BasicTensor<Other>::from_data(shape(), std::move(converted),
                                         requires_grad());
  }

  bool shares_storage(const BasicTensor& other) const noexcept {
    return node_ == other.node_;
  }

 private:
  template <typename R>
  friend void backward(const BasicTensor<R>& loss);

  explicit BasicTensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  Node& node() const;

  std::shared_ptr<Node> node_;
};

// Reverse-mode sweep from a scalar loss. Leaf gradients accumulate across
// calls; intermediate gradients are reset on every call.
template <typename Real>
void backward(const BasicTensor<Real>& loss);

template <typename Real>
struct NamedTensor {
  std::string name;
  BasicTensor<Real> tensor;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

}  // namespace posphase::numerics
