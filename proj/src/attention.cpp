#include "calico/attention.hpp"

#include <cmath>

namespace calico {

AttentionParams make_attention(ParamSet& params, const std::string& prefix,
                               const AttentionInit& init, Rng& rng) {
  if (init.inner_width % init.heads != 0) {
    throw ConfigError(msg(prefix, ": inner width ", init.inner_width,
                          " not divisible by ", init.heads, " heads"));
  }
  AttentionParams p;
  p.heads = init.heads;
  p.wq = params.add(prefix + ".wq", glorot(rng, init.query_width, init.inner_width));
  p.bq = params.add(prefix + ".bq", Tensor::zeros({init.inner_width}));
  p.wk = params.add(prefix + ".wk", glorot(rng, init.kv_width, init.inner_width));
  p.bk = params.add(prefix + ".bk", Tensor::zeros({init.inner_width}));
  p.wv = params.add(prefix + ".wv", glorot(rng, init.kv_width, init.inner_width));
  p.bv = params.add(prefix + ".bv", Tensor::zeros({init.inner_width}));
  Tensor wo = init.zero_output ? Tensor::zeros({init.inner_width, init.out_width})
                               : glorot(rng, init.inner_width, init.out_width);
  p.wo = params.add(prefix + ".wo", std::move(wo));
  p.bo = params.add(prefix + ".bo", Tensor::zeros({init.out_width}));
  return p;
}

AttentionParams attention_view(ParamSet& params, const std::string& prefix,
                               int64_t heads) {
  AttentionParams p;
  p.heads = heads;
  p.wq = params.at(prefix + ".wq");
  p.bq = params.at(prefix + ".bq");
  p.wk = params.at(prefix + ".wk");
  p.bk = params.at(prefix + ".bk");
  p.wv = params.at(prefix + ".wv");
  p.bv = params.at(prefix + ".bv");
  p.wo = params.at(prefix + ".wo");
  p.bo = params.at(prefix + ".bo");
  return p;
}

Tensor cross_attention(const Tensor& query, const Tensor& key_value,
                       const AttentionParams& params, bool causal) {
  if (query.rank() != 2 || key_value.rank() != 2) {
    throw DimensionError(msg("cross_attention: operands must be 2-D, got ",
                             shape_str(query.shape()), " and ",
                             shape_str(key_value.shape())));
  }
  if (query.dim(1) != params.wq.dim(0)) {
    throw ConfigError(msg("cross_attention: query width ", query.dim(1),
                          " vs wq input ", params.wq.dim(0)));
  }
  if (key_value.dim(1) != params.wk.dim(0) || key_value.dim(1) != params.wv.dim(0)) {
    throw ConfigError(msg("cross_attention: key/value width ", key_value.dim(1),
                          " vs wk/wv input ", params.wk.dim(0), "/", params.wv.dim(0)));
  }
  int64_t inner = params.wq.dim(1);
  if (params.wk.dim(1) != inner || params.wv.dim(1) != inner ||
      params.wo.dim(0) != inner) {
    throw ConfigError("cross_attention: projection inner widths disagree");
  }
  if (inner % params.heads != 0) {
    throw ConfigError(msg("cross_attention: inner width ", inner,
                          " not divisible by ", params.heads, " heads"));
  }
  if (causal && query.dim(0) != key_value.dim(0)) {
    throw ConfigError("cross_attention: causal masking needs matched lengths");
  }

  int64_t head_dim = inner / params.heads;
  Tensor q = split_heads(linear(query, params.wq, params.bq), params.heads);
  Tensor k = split_heads(linear(key_value, params.wk, params.bk), params.heads);
  Tensor v = split_heads(linear(key_value, params.wv, params.bv), params.heads);

  Tensor scores = scale(matmul(q, transpose_last2(k)),
                        1.0 / std::sqrt(static_cast<double>(head_dim)));
  if (causal) {
    int64_t s = query.dim(0);
    Tensor mask = Tensor::zeros({s, s});
    auto& mv = mask.mutable_data();
    for (int64_t i = 0; i < s; ++i)
      for (int64_t j = i + 1; j < s; ++j) mv[i * s + j] = -1e30;
    scores = add(scores, mask);
  }
  Tensor attn = softmax(scores, -1);
  Tensor ctx = merge_heads(matmul(attn, v));
  return linear(ctx, params.wo, params.bo);
}

}  // namespace calico
