#pragma once

#include <string>

#include "calico/ops.hpp"
#include "calico/params.hpp"

namespace calico {

// Projection bundle for one multi-head attention block. wq: D_q x P,
// wk/wv: D_kv x P, wo: P x D_out with P divisible by heads.
struct AttentionParams {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  int64_t heads = 4;
};

struct AttentionInit {
  int64_t query_width = 0;
  int64_t kv_width = 0;
  int64_t inner_width = 0;  // P
  int64_t out_width = 0;
  int64_t heads = 4;
  bool zero_output = false;  // identity-at-init blocks zero wo/bo
};

// Registers q/k/v/o projections under `prefix.` and returns views of them.
AttentionParams make_attention(ParamSet& params, const std::string& prefix,
                               const AttentionInit& init, Rng& rng);

// Collects existing parameters registered by make_attention.
AttentionParams attention_view(ParamSet& params, const std::string& prefix,
                               int64_t heads);

// softmax(Q K^T / sqrt(d_h)) V with multi-head projections. query: S_q x D_q,
// key_value: S_kv x D_kv -> S_q x D_out. Optional causal mask (rows attend to
// columns <= row; requires S_q == S_kv).
Tensor cross_attention(const Tensor& query, const Tensor& key_value,
                       const AttentionParams& params, bool causal = false);

}  // namespace calico
