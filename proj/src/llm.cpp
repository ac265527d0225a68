#include "calico/llm.hpp"

#include <cmath>

#include "calico/ops.hpp"

namespace calico {

Tensor add_positions(const Tensor& x) {
  if (x.rank() != 2) throw DimensionError("add_positions: input must be (S, D)");
  int64_t s = x.dim(0), d = x.dim(1);
  Tensor pos = Tensor::zeros({s, d});
  auto& pv = pos.mutable_data();
  for (int64_t p = 0; p < s; ++p) {
    for (int64_t i = 0; i < d; i += 2) {
      double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(d));
      pv[p * d + i] = std::sin(p * freq);
      if (i + 1 < d) pv[p * d + i + 1] = std::cos(p * freq);
    }
  }
  return add(x, pos);
}

ToyLlm::ToyLlm(ParamSet& params, const std::string& prefix, int64_t vocab,
               int64_t width, int64_t layers, int64_t heads, Rng& rng)
    : vocab_(vocab), width_(width), layers_(layers), heads_(heads) {
  if (layers < 2) throw ConfigError("llm: need at least 2 layers");
  embed_ = params.add(prefix + ".embed", normal_init(rng, {vocab, width}, 0.02));
  blocks_.reserve(layers);
  for (int64_t l = 1; l <= layers; ++l) {
    blocks_.push_back(
        TransformerBlock::create(params, msg(prefix, ".block", l), width, heads, rng));
  }
  final_gain_ = params.add(prefix + ".final_ln.gain", Tensor::full({width}, 1.0));
  final_bias_ = params.add(prefix + ".final_ln.bias", Tensor::zeros({width}));
  head_w_ = params.add(prefix + ".head.w", glorot(rng, width, vocab));
  head_b_ = params.add(prefix + ".head.b", Tensor::zeros({vocab}));
}

ToyLlm ToyLlm::view(ParamSet& params, const std::string& prefix, int64_t vocab,
                    int64_t width, int64_t layers, int64_t heads) {
  ToyLlm m;
  m.vocab_ = vocab;
  m.width_ = width;
  m.layers_ = layers;
  m.heads_ = heads;
  m.embed_ = params.at(prefix + ".embed");
  m.blocks_.reserve(layers);
  for (int64_t l = 1; l <= layers; ++l) {
    m.blocks_.push_back(TransformerBlock::view(params, msg(prefix, ".block", l), heads));
  }
  m.final_gain_ = params.at(prefix + ".final_ln.gain");
  m.final_bias_ = params.at(prefix + ".final_ln.bias");
  m.head_w_ = params.at(prefix + ".head.w");
  m.head_b_ = params.at(prefix + ".head.b");
  return m;
}

LlmOutputs ToyLlm::forward(const Tensor& t0, const HookMap& hooks) const {
  if (t0.rank() != 2 || t0.dim(1) != width_) {
    throw DimensionError(msg("llm: input must be (S, ", width_, "), got ",
                             shape_str(t0.shape())));
  }
  for (const auto& [layer, fn] : hooks) {
    (void)fn;
    if (layer < 1 || layer >= layers_) {
      throw ConfigError(msg("llm: hook at layer ", layer, " outside 1..", layers_ - 1));
    }
  }
  LlmOutputs out;
  out.layer_outputs.reserve(layers_);
  Tensor x = add_positions(t0);
  for (int64_t l = 1; l <= layers_; ++l) {
    x = blocks_[l - 1].forward(x, /*causal=*/true);
    auto hook = hooks.find(l);
    if (hook != hooks.end()) x = hook->second(x, l);
    out.layer_outputs.push_back(x);
  }
  out.hidden = layer_norm(x, final_gain_, final_bias_);
  out.logits = linear(out.hidden, head_w_, head_b_);
  return out;
}

}  // namespace calico
