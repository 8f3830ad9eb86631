#include "posphase/numerics/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

#include "posphase/errors.hpp"

namespace posphase::numerics {

namespace {

thread_local bool tls_grad_enabled = true;

template <typename Real>
void check_finite(const char* op, const std::vector<Real>& data) {
  for (Real v : data) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(op) + " produced a non-finite value");
    }
  }
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

NoGradGuard::NoGradGuard() : previous_(tls_grad_enabled) {
  tls_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() { tls_grad_enabled = previous_; }

bool grad_enabled() { return tls_grad_enabled; }

template <typename Real>
BasicTensor<Real> BasicTensor<Real>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), Real{0}, requires_grad);
}

template <typename Real>
BasicTensor<Real> BasicTensor<Real>::full(Shape shape, Real value,
                                          bool requires_grad) {
  std::vector<Real> data(shape_size(shape), value);
  return from_data(std::move(shape), std::move(data), requires_grad);
}

template <typename Real>
BasicTensor<Real> BasicTensor<Real>::from_data(Shape shape,
                                               std::vector<Real> data,
                                               bool requires_grad) {
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("zero-sized dimension in " + shape_string(shape));
  }
  if (shape_size(shape) != data.size()) {
    throw ShapeError("shape " + shape_string(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  }
  check_finite("from_data", data);
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return BasicTensor(std::move(node));
}

template <typename Real>
BasicTensor<Real> BasicTensor<Real>::scalar(Real value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

template <typename Real>
BasicTensor<Real> BasicTensor<Real>::make_result(
    const char* op, Shape shape, std::vector<Real> data,
    std::initializer_list<BasicTensor> parents, BackwardFn backward) {
  if (shape_size(shape) != data.size()) {
    throw ShapeError(std::string(op) + ": result shape " + shape_string(shape) +
                     " does not match data");
  }
  check_finite(op, data);
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;

  bool needs_grad = false;
  if (tls_grad_enabled) {
    for (const auto& p : parents) {
      if (p.defined() && p.requires_grad()) needs_grad = true;
    }
  }
  if (needs_grad) {
    node->requires_grad = true;
    node->leaf = false;
    for (const auto& p : parents) {
      if (p.defined()) node->parents.push_back(p.node_);
    }
    node->backward = std::move(backward);
  }
  return BasicTensor(std::move(node));
}

template <typename Real>
typename BasicTensor<Real>::Node& BasicTensor<Real>::node() const {
  if (!node_) throw UsageError("operation on an undefined tensor");
  return *node_;
}

template <typename Real>
const Shape& BasicTensor<Real>::shape() const {
  return node().shape;
}

template <typename Real>
std::size_t BasicTensor<Real>::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw ShapeError("axis out of range for " + shape_string(s));
  return s[axis];
}

template <typename Real>
std::size_t BasicTensor<Real>::size() const {
  return node().data.size();
}

template <typename Real>
std::size_t BasicTensor<Real>::cols() const {
  return shape().back();
}

template <typename Real>
std::size_t BasicTensor<Real>::rows() const {
  return size() / cols();
}

template <typename Real>
std::span<const Real> BasicTensor<Real>::data() const {
  return node().data;
}

template <typename Real>
std::span<Real> BasicTensor<Real>::mutable_data() {
  return node().data;
}

template <typename Real>
Real BasicTensor<Real>::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape()));
  return node().data[0];
}

template <typename Real>
Real BasicTensor<Real>::at(std::size_t row, std::size_t col) const {
  return node().data[row * cols() + col];
}

template <typename Real>
bool BasicTensor<Real>::requires_grad() const {
  return node().requires_grad;
}

template <typename Real>
void BasicTensor<Real>::set_requires_grad(bool value) {
  if (!is_leaf()) throw UsageError("requires_grad can only be set on leaves");
  node().requires_grad = value;
}

template <typename Real>
bool BasicTensor<Real>::is_leaf() const {
  return node().leaf;
}

template <typename Real>
const char* BasicTensor<Real>::op_name() const {
  return node().op;
}

template <typename Real>
bool BasicTensor<Real>::has_grad() const {
  return node().grad.size() == node().data.size();
}

template <typename Real>
std::span<const Real> BasicTensor<Real>::grad() const {
  if (!has_grad()) throw UsageError("tensor has no gradient");
  return node().grad;
}

template <typename Real>
std::span<Real> BasicTensor<Real>::mutable_grad() const {
  node().ensure_grad();
  return node().grad;
}

template <typename Real>
void BasicTensor<Real>::accumulate_grad(std::span<const Real> delta) const {
  auto& n = node();
  if (delta.size() != n.data.size()) throw ShapeError("gradient size mismatch");
  n.ensure_grad();
  for (std::size_t i = 0; i < delta.size(); ++i) n.grad[i] += delta[i];
}

template <typename Real>
void BasicTensor<Real>::zero_grad() {
  auto& n = node();
  std::fill(n.grad.begin(), n.grad.end(), Real{0});
}

template <typename Real>
BasicTensor<Real> BasicTensor<Real>::clone() const {
  return from_data(shape(), node().data, requires_grad() && is_leaf());
}

template <typename Real>
void backward(const BasicTensor<Real>& loss) {
  using Node = detail::TensorNode<Real>;
  if (!loss.defined()) throw UsageError("backward on an undefined tensor");
  if (loss.size() != 1) {
    throw UsageError("backward requires a scalar loss, got " +
                     shape_string(loss.shape()));
  }
  if (!loss.requires_grad()) throw UsageError("loss does not require grad");

  Node* root = loss.node_.get();
  if (root->leaf) {
    root->ensure_grad();
    root->grad[0] += Real{1};
    return;
  }

  // Iterative post-order DFS over interior nodes.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (!parent->leaf && parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) n->grad.assign(n->data.size(), Real{0});
  root->grad[0] = Real{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    (*it)->backward((*it)->grad);
  }
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template void backward<float>(const BasicTensor<float>&);
template void backward<double>(const BasicTensor<double>&);

}  // namespace posphase::numerics
