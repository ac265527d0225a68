#pragma once

#include <utility>
#include <vector>

#include "calico/tensor.hpp"

namespace calico {

// Elementwise. b may match a's shape, be a suffix of it (broadcast over the
// leading axes), or be a scalar.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double c);
Tensor add_const(const Tensor& a, double c);
Tensor neg(const Tensor& a);

// Batched matrix product. a: [*,m,k], b: [*,k,n]; leading batch dims are
// right-aligned and must match or be 1.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose_last2(const Tensor& a);

Tensor softmax(const Tensor& x, int64_t axis);
Tensor log_softmax(const Tensor& x, int64_t axis);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);

Tensor sigmoid(const Tensor& x);
Tensor softplus(const Tensor& x);  // ln(1 + e^x), overflow-safe
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor gelu(const Tensor& x);  // exact erf form

Tensor sum(const Tensor& x);   // -> scalar
Tensor mean(const Tensor& x);  // -> scalar

Tensor reshape(const Tensor& x, Shape shape);

// First-axis structure ops.
Tensor slice_rows(const Tensor& x, int64_t start, int64_t count);
Tensor index0(const Tensor& x, int64_t i);           // drops the first axis
Tensor stack0(const std::vector<Tensor>& parts);     // adds a leading axis
Tensor concat0(const std::vector<Tensor>& parts);

// y = x with rows [start, start+delta.rows) incremented by delta (2-D).
Tensor add_rows(const Tensor& x, const Tensor& delta, int64_t start);

// Embedding-style row gather from a 2-D table; grads scatter back.
Tensor gather_rows(const Tensor& table, const std::vector<int64_t>& ids);

// out[i] = x[i, ids[i]] for 2-D x.
Tensor take_per_row(const Tensor& x, const std::vector<int64_t>& ids);

// Builds a 2-D tensor row by row from (source index, source row) picks.
// All sources are 2-D with a common width.
Tensor compose_rows(const std::vector<Tensor>& sources,
                    const std::vector<std::pair<int, int64_t>>& picks);

// (S,P) -> (H,S,P/H) and back; P must be divisible by H.
Tensor split_heads(const Tensor& x, int64_t heads);
Tensor merge_heads(const Tensor& x);

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

}  // namespace calico
