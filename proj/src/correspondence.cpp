#include "calico/correspondence.hpp"

#include "calico/ops.hpp"

namespace calico {

std::vector<int64_t> plan_cam_layers(int64_t n_layers, int64_t k) {
  if (k < 1 || k >= n_layers) {
    throw ConfigError(msg("plan_cam_layers: k (", k, ") must satisfy 1 <= k < N (",
                          n_layers, ")"));
  }
  std::vector<int64_t> layers(k);
  for (int64_t i = 1; i <= k; ++i) {
    layers[i - 1] = (i * n_layers + k) / (k + 1);  // ceil(i*N/(k+1))
  }
  for (size_t i = 1; i < layers.size(); ++i) {
    if (layers[i] <= layers[i - 1]) {
      throw ConfigError(msg("plan_cam_layers: layers not strictly increasing for N=",
                            n_layers, " k=", k));
    }
  }
  return layers;
}

CemModule::CemModule(ParamSet& params, const std::string& prefix, int64_t d_c,
                     int64_t d_s, int64_t heads, Rng& rng) {
  fusion_ = make_attention(params, prefix + ".fusion",
                           {.query_width = d_c, .kv_width = d_s, .inner_width = d_c,
                            .out_width = d_c, .heads = heads, .zero_output = true},
                           rng);
}

CemModule CemModule::view(ParamSet& params, const std::string& prefix, int64_t heads) {
  CemModule m;
  m.fusion_ = attention_view(params, prefix + ".fusion", heads);
  return m;
}

Tensor CemModule::fuse(const Tensor& x_global, const Tensor& x_semantic) const {
  if (x_global.rank() != 3 || x_semantic.rank() != 3 ||
      x_global.dim(0) != x_semantic.dim(0)) {
    throw DimensionError(msg("cem: expected (N_I,S,D) pairs, got ",
                             shape_str(x_global.shape()), " and ",
                             shape_str(x_semantic.shape())));
  }
  std::vector<Tensor> fused;
  fused.reserve(x_global.dim(0));
  for (int64_t j = 0; j < x_global.dim(0); ++j) {
    Tensor g = index0(x_global, j);
    Tensor s = index0(x_semantic, j);
    fused.push_back(add(g, cross_attention(g, s, fusion_)));
  }
  return stack0(fused);
}

CamModule::CamModule(ParamSet& params, const std::string& prefix,
                     const std::vector<int64_t>& layers, int64_t d, int64_t d_i,
                     Rng& rng)
    : layers_(layers) {
  per_layer_.reserve(layers.size());
  for (int64_t layer : layers) {
    LayerParams lp;
    lp.adapt_w = params.add(msg(prefix, ".layer", layer, ".adapt.w"), glorot(rng, d, d_i));
    lp.adapt_b = params.add(msg(prefix, ".layer", layer, ".adapt.b"), Tensor::zeros({d_i}));
    // Zero init keeps the injection inert until trained.
    lp.reint_w = params.add(msg(prefix, ".layer", layer, ".reint.w"), Tensor::zeros({d_i, d}));
    lp.reint_b = params.add(msg(prefix, ".layer", layer, ".reint.b"), Tensor::zeros({d}));
    per_layer_.push_back(std::move(lp));
  }
}

CamModule CamModule::view(ParamSet& params, const std::string& prefix,
                          const std::vector<int64_t>& layers) {
  CamModule m;
  m.layers_ = layers;
  m.per_layer_.reserve(layers.size());
  for (int64_t layer : layers) {
    LayerParams lp;
    lp.adapt_w = params.at(msg(prefix, ".layer", layer, ".adapt.w"));
    lp.adapt_b = params.at(msg(prefix, ".layer", layer, ".adapt.b"));
    lp.reint_w = params.at(msg(prefix, ".layer", layer, ".reint.w"));
    lp.reint_b = params.at(msg(prefix, ".layer", layer, ".reint.b"));
    m.per_layer_.push_back(std::move(lp));
  }
  return m;
}

bool CamModule::handles(int64_t layer) const {
  for (int64_t l : layers_) {
    if (l == layer) return true;
  }
  return false;
}

const CamModule::LayerParams& CamModule::bundle(int64_t layer) const {
  for (size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i] == layer) return per_layer_[i];
  }
  throw ConfigError(msg("cam: layer ", layer, " has no adaptation bundle"));
}

Tensor CamModule::guidance(const Tensor& last_token_state, const Tensor& q,
                           int64_t layer) const {
  const LayerParams& lp = bundle(layer);
  if (last_token_state.rank() != 1 || last_token_state.dim(0) != lp.adapt_w.dim(0)) {
    throw DimensionError(msg("cam guidance: state ", shape_str(last_token_state.shape()),
                             " vs f_adaptation input ", lp.adapt_w.dim(0)));
  }
  Tensor g = reshape(last_token_state, {1, last_token_state.dim(0)});
  Tensor projected = reshape(linear(g, lp.adapt_w, lp.adapt_b), {lp.adapt_w.dim(1)});
  return add(q, projected);  // broadcast over all S_I query rows
}

Tensor CamModule::extract(const Tensor& q_prime, const Tensor& x_global_fused,
                          const AttentionParams& qformer) const {
  if (x_global_fused.rank() != 3) {
    throw DimensionError("cam extract: fused globals must be (N_I, S_C, D_C)");
  }
  std::vector<Tensor> per_image;
  per_image.reserve(x_global_fused.dim(0));
  for (int64_t j = 0; j < x_global_fused.dim(0); ++j) {
    per_image.push_back(cross_attention(q_prime, index0(x_global_fused, j), qformer));
  }
  return stack0(per_image);
}

Tensor CamModule::inject(const Tensor& i_l, const Tensor& x_embed_prime,
                         int64_t layer) const {
  const LayerParams& lp = bundle(layer);
  if (i_l.rank() != 3 || x_embed_prime.rank() != 3 ||
      i_l.dim(0) != x_embed_prime.dim(0) || i_l.dim(1) != x_embed_prime.dim(1)) {
    throw AssemblyError(msg("cam inject: slot bookkeeping mismatch, ",
                            shape_str(i_l.shape()), " vs ",
                            shape_str(x_embed_prime.shape())));
  }
  std::vector<Tensor> fused;
  fused.reserve(i_l.dim(0));
  for (int64_t j = 0; j < i_l.dim(0); ++j) {
    Tensor delta = linear(index0(x_embed_prime, j), lp.reint_w, lp.reint_b);
    fused.push_back(add(index0(i_l, j), delta));
  }
  return stack0(fused);
}

}  // namespace calico
