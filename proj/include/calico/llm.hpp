#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "calico/encoders.hpp"

namespace calico {

// Injection applied to the layer-l output T^l before block l+1 runs.
using LayerHook = std::function<Tensor(const Tensor& t_l, int64_t layer)>;
using HookMap = std::map<int64_t, LayerHook>;

struct LlmOutputs {
  std::vector<Tensor> layer_outputs;  // T^1 .. T^N (post-hook where hooked)
  Tensor hidden;                      // final-layer states after the last norm
  Tensor logits;                      // (S, vocab)
};

// N-block causal decoder over an already-assembled (S, D) input. Sinusoidal
// positions keep the sequence length unbounded by configuration.
class ToyLlm {
 public:
  ToyLlm() = default;
  ToyLlm(ParamSet& params, const std::string& prefix, int64_t vocab, int64_t width,
         int64_t layers, int64_t heads, Rng& rng);
  static ToyLlm view(ParamSet& params, const std::string& prefix, int64_t vocab,
                     int64_t width, int64_t layers, int64_t heads);

  // Hook keys must lie in {1..N-1}.
  LlmOutputs forward(const Tensor& t0, const HookMap& hooks = {}) const;

  const Tensor& embedding_table() const { return embed_; }
  int64_t layers() const { return layers_; }
  int64_t width() const { return width_; }
  int64_t vocab() const { return vocab_; }

 private:
  int64_t vocab_ = 0, width_ = 0, layers_ = 0, heads_ = 0;
  Tensor embed_;  // (vocab, D); shared by assemble_input
  std::vector<TransformerBlock> blocks_;
  Tensor final_gain_, final_bias_;
  Tensor head_w_, head_b_;
};

// Adds fixed sinusoidal position encodings to an (S, D) input.
Tensor add_positions(const Tensor& x);

}  // namespace calico
