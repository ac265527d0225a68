#pragma once

#include <string>

#include "calico/attention.hpp"
#include "calico/sequence.hpp"

namespace calico {

// Pre-norm transformer block: x + attn(ln(x)), then x + mlp(ln(x)).
struct TransformerBlock {
  Tensor ln1_gain, ln1_bias, ln2_gain, ln2_bias;
  AttentionParams attn;
  Tensor mlp_w1, mlp_b1, mlp_w2, mlp_b2;

  static TransformerBlock create(ParamSet& params, const std::string& prefix,
                                 int64_t width, int64_t heads, Rng& rng,
                                 int64_t mlp_mult = 4);
  static TransformerBlock view(ParamSet& params, const std::string& prefix,
                               int64_t heads);
  Tensor forward(const Tensor& x, bool causal) const;
};

// Toy image encoder: non-overlapping pixel-group patch embedding + learned
// positions + two transformer blocks. Stands in for the frozen pretrained
// encoders; per-image independent and deterministic given parameters.
class ToyEncoder {
 public:
  ToyEncoder() = default;
  ToyEncoder(ParamSet& params, const std::string& prefix, int64_t h, int64_t w,
             int64_t seq_len, int64_t width, int64_t heads, Rng& rng,
             bool trainable = true);
  static ToyEncoder view(ParamSet& params, const std::string& prefix, int64_t h,
                         int64_t w, int64_t seq_len, int64_t width, int64_t heads);

  // images: N_I tensors 3xHxW -> (N_I, seq_len, width).
  Tensor encode(const ImageBatch& images) const;
  Tensor encode_one(const Tensor& image) const;

  int64_t seq_len() const { return seq_len_; }
  int64_t width() const { return width_; }

 private:
  int64_t h_ = 0, w_ = 0, seq_len_ = 0, width_ = 0, chunk_ = 0, heads_ = 0;
  Tensor patch_w_, patch_b_, pos_;
  TransformerBlock block1_, block2_;
};

}  // namespace calico
