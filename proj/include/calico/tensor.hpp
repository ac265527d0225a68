#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "calico/errors.hpp"

namespace calico {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorNode {
  Shape shape;
  std::shared_ptr<std::vector<double>> data;  // shared across shallow clones
  std::vector<double> grad;                   // lazily sized to numel
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Propagates this node's grad into the parents' grads. Set only when
  // requires_grad; cleared after backward to release the graph.
  std::function<void(TensorNode&)> backward_fn;

  int64_t numel() const { return static_cast<int64_t>(data->size()); }
  std::vector<double>& grad_buf();  // allocates zeros on first use
};

// Dense f64 tensor handle with reverse-mode autodiff. Value-semantics handle
// over a shared node; data is immutable after construction except through
// Parameter updates between graph builds.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node().shape; }
  int64_t rank() const { return static_cast<int64_t>(node().shape.size()); }
  int64_t dim(int64_t axis) const;
  int64_t numel() const { return node().numel(); }

  const std::vector<double>& data() const { return *node().data; }
  std::vector<double>& mutable_data() { return *node().data; }
  const std::vector<double>& grad() const;
  bool has_grad() const { return !node().grad.empty(); }
  void clear_grad() { node().grad.clear(); }

  bool requires_grad() const { return node().requires_grad; }
  Tensor& set_requires_grad(bool v);

  double value() const;                 // scalar tensors only
  double at(std::initializer_list<int64_t> idx) const;

  // Runs reverse-mode accumulation from this scalar. Single-threaded; frees
  // the recorded graph afterwards so parameters can be reused next step.
  void backward();

  // New node sharing this node's data but with independent grad storage.
  // Lets worker threads accumulate per-sample gradients without racing.
  Tensor shallow_clone() const;

  TensorNode& node() { return *node_; }
  const TensorNode& node() const { return *node_; }
  const std::shared_ptr<TensorNode>& ptr() const { return node_; }

  // Used by ops: wraps a freshly built node, verifying finiteness.
  static Tensor adopt(std::shared_ptr<TensorNode> node, const char* op_name);

 private:
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}
  std::shared_ptr<TensorNode> node_;
};

// Throws NumericError if any value is NaN/Inf.
void check_finite(const std::vector<double>& values, const char* op_name);

}  // namespace calico
