#include "calico/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace calico {

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d <= 0) throw DimensionError(msg("non-positive extent in shape ", shape_str(shape)));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

std::vector<double>& TensorNode::grad_buf() {
  if (grad.empty()) grad.assign(data->size(), 0.0);
  return grad;
}

void check_finite(const std::vector<double>& values, const char* op_name) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(msg("non-finite value produced by ", op_name));
    }
  }
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  int64_t n = shape_numel(shape);
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->data = std::make_shared<std::vector<double>>(n, 0.0);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.mutable_data().begin(), t.mutable_data().end(), value);
  check_finite(t.data(), "full");
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  int64_t n = shape_numel(shape);
  if (n != static_cast<int64_t>(values.size())) {
    throw DimensionError(msg("shape ", shape_str(shape), " expects ", n,
                             " values, got ", values.size()));
  }
  check_finite(values, "from");
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->data = std::make_shared<std::vector<double>>(std::move(values));
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

int64_t Tensor::dim(int64_t axis) const {
  const Shape& s = node().shape;
  int64_t r = static_cast<int64_t>(s.size());
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) {
    throw DimensionError(msg("axis ", axis, " out of range for ", shape_str(s)));
  }
  return s[axis];
}

const std::vector<double>& Tensor::grad() const {
  if (node().grad.empty()) {
    throw Error(msg("tensor has no gradient; run backward() first"));
  }
  return node().grad;
}

Tensor& Tensor::set_requires_grad(bool v) {
  node().requires_grad = v;
  return *this;
}

double Tensor::value() const {
  if (numel() != 1) {
    throw DimensionError(msg("value() on non-scalar ", shape_str(shape())));
  }
  return (*node().data)[0];
}

double Tensor::at(std::initializer_list<int64_t> idx) const {
  const Shape& s = shape();
  if (idx.size() != s.size()) {
    throw DimensionError(msg("index rank ", idx.size(), " vs ", shape_str(s)));
  }
  int64_t flat = 0;
  size_t k = 0;
  for (int64_t i : idx) {
    if (i < 0 || i >= s[k]) throw DimensionError(msg("index ", i, " out of range for ", shape_str(s)));
    flat = flat * s[k] + i;
    ++k;
  }
  return (*node().data)[flat];
}

Tensor Tensor::shallow_clone() const {
  auto clone = std::make_shared<TensorNode>();
  clone->shape = node().shape;
  clone->data = node().data;
  clone->requires_grad = node().requires_grad;
  return Tensor(std::move(clone));
}

Tensor Tensor::adopt(std::shared_ptr<TensorNode> node, const char* op_name) {
  check_finite(*node->data, op_name);
  return Tensor(std::move(node));
}

void Tensor::backward() {
  if (numel() != 1) {
    throw DimensionError("backward() requires a scalar objective");
  }
  // Topological order over the recorded graph, children before parents.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> seen;
  std::vector<std::pair<TensorNode*, size_t>> stack;
  stack.emplace_back(&node(), 0);
  seen.insert(&node());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      TensorNode* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node().grad_buf()[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backward_fn) {
      n->backward_fn(*n);
      n->backward_fn = nullptr;  // release closure captures
    }
  }
  // Drop the graph edges so intermediate nodes free up; leaf grads remain.
  for (TensorNode* n : order) n->parents.clear();
}

}  // namespace calico
