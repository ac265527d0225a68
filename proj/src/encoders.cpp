#include "calico/encoders.hpp"

#include "calico/ops.hpp"

namespace calico {

TransformerBlock TransformerBlock::create(ParamSet& params, const std::string& prefix,
                                          int64_t width, int64_t heads, Rng& rng,
                                          int64_t mlp_mult) {
  TransformerBlock b;
  b.ln1_gain = params.add(prefix + ".ln1.gain", Tensor::full({width}, 1.0));
  b.ln1_bias = params.add(prefix + ".ln1.bias", Tensor::zeros({width}));
  b.attn = make_attention(params, prefix + ".attn",
                          {.query_width = width, .kv_width = width,
                           .inner_width = width, .out_width = width, .heads = heads},
                          rng);
  b.ln2_gain = params.add(prefix + ".ln2.gain", Tensor::full({width}, 1.0));
  b.ln2_bias = params.add(prefix + ".ln2.bias", Tensor::zeros({width}));
  int64_t hidden = width * mlp_mult;
  b.mlp_w1 = params.add(prefix + ".mlp.w1", glorot(rng, width, hidden));
  b.mlp_b1 = params.add(prefix + ".mlp.b1", Tensor::zeros({hidden}));
  b.mlp_w2 = params.add(prefix + ".mlp.w2", glorot(rng, hidden, width));
  b.mlp_b2 = params.add(prefix + ".mlp.b2", Tensor::zeros({width}));
  return b;
}

TransformerBlock TransformerBlock::view(ParamSet& params, const std::string& prefix,
                                        int64_t heads) {
  TransformerBlock b;
  b.ln1_gain = params.at(prefix + ".ln1.gain");
  b.ln1_bias = params.at(prefix + ".ln1.bias");
  b.attn = attention_view(params, prefix + ".attn", heads);
  b.ln2_gain = params.at(prefix + ".ln2.gain");
  b.ln2_bias = params.at(prefix + ".ln2.bias");
  b.mlp_w1 = params.at(prefix + ".mlp.w1");
  b.mlp_b1 = params.at(prefix + ".mlp.b1");
  b.mlp_w2 = params.at(prefix + ".mlp.w2");
  b.mlp_b2 = params.at(prefix + ".mlp.b2");
  return b;
}

Tensor TransformerBlock::forward(const Tensor& x, bool causal) const {
  Tensor normed = layer_norm(x, ln1_gain, ln1_bias);
  Tensor h = add(x, cross_attention(normed, normed, attn, causal));
  Tensor normed2 = layer_norm(h, ln2_gain, ln2_bias);
  Tensor m = linear(gelu(linear(normed2, mlp_w1, mlp_b1)), mlp_w2, mlp_b2);
  return add(h, m);
}

ToyEncoder::ToyEncoder(ParamSet& params, const std::string& prefix, int64_t h,
                       int64_t w, int64_t seq_len, int64_t width, int64_t heads,
                       Rng& rng, bool trainable)
    : h_(h), w_(w), seq_len_(seq_len), width_(width), heads_(heads) {
  int64_t pixels = 3 * h * w;
  if (pixels % seq_len != 0) {
    throw ConfigError(msg(prefix, ": 3*H*W (", pixels, ") not divisible by sequence length ",
                          seq_len));
  }
  chunk_ = pixels / seq_len;
  size_t first = params.size();
  patch_w_ = params.add(prefix + ".patch.w", glorot(rng, chunk_, width));
  patch_b_ = params.add(prefix + ".patch.b", Tensor::zeros({width}));
  pos_ = params.add(prefix + ".pos", normal_init(rng, {seq_len, width}, 0.02));
  block1_ = TransformerBlock::create(params, prefix + ".block1", width, heads, rng);
  block2_ = TransformerBlock::create(params, prefix + ".block2", width, heads, rng);
  if (!trainable) {
    for (size_t i = first; i < params.size(); ++i) params.items()[i].trainable = false;
  }
}

ToyEncoder ToyEncoder::view(ParamSet& params, const std::string& prefix, int64_t h,
                            int64_t w, int64_t seq_len, int64_t width, int64_t heads) {
  ToyEncoder e;
  e.h_ = h;
  e.w_ = w;
  e.seq_len_ = seq_len;
  e.width_ = width;
  e.heads_ = heads;
  e.chunk_ = 3 * h * w / seq_len;
  e.patch_w_ = params.at(prefix + ".patch.w");
  e.patch_b_ = params.at(prefix + ".patch.b");
  e.pos_ = params.at(prefix + ".pos");
  e.block1_ = TransformerBlock::view(params, prefix + ".block1", heads);
  e.block2_ = TransformerBlock::view(params, prefix + ".block2", heads);
  return e;
}

Tensor ToyEncoder::encode_one(const Tensor& image) const {
  if (image.shape() != Shape{3, h_, w_}) {
    throw DimensionError(msg("encoder expects (3x", h_, "x", w_, "), got ",
                             shape_str(image.shape())));
  }
  Tensor patches = reshape(image, {seq_len_, chunk_});
  Tensor x = add(linear(patches, patch_w_, patch_b_), pos_);
  x = block1_.forward(x, /*causal=*/false);
  x = block2_.forward(x, /*causal=*/false);
  return x;
}

Tensor ToyEncoder::encode(const ImageBatch& images) const {
  images.validate(h_, w_, /*n_i_max=*/images.count());
  std::vector<Tensor> per_image;
  per_image.reserve(images.images.size());
  for (const Tensor& img : images.images) per_image.push_back(encode_one(img));
  return stack0(per_image);
}

}  // namespace calico
