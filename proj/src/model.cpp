#include "calico/model.hpp"

#include <cmath>

#include "calico/ops.hpp"

namespace calico {

CalicoModel::DecoderBlock CalicoModel::make_decoder_block(const std::string& prefix,
                                                          Rng& rng) {
  DecoderBlock b;
  int64_t d = config_.D_D;
  b.ln_gain = params_.add(prefix + ".ln1.gain", Tensor::full({d}, 1.0));
  b.ln_bias = params_.add(prefix + ".ln1.bias", Tensor::zeros({d}));
  b.attn = make_attention(params_, prefix + ".attn",
                          {.query_width = d, .kv_width = d, .inner_width = d,
                           .out_width = d, .heads = config_.heads},
                          rng);
  b.ln2_gain = params_.add(prefix + ".ln2.gain", Tensor::full({d}, 1.0));
  b.ln2_bias = params_.add(prefix + ".ln2.bias", Tensor::zeros({d}));
  b.mlp_w1 = params_.add(prefix + ".mlp.w1", glorot(rng, d, 4 * d));
  b.mlp_b1 = params_.add(prefix + ".mlp.b1", Tensor::zeros({4 * d}));
  b.mlp_w2 = params_.add(prefix + ".mlp.w2", glorot(rng, 4 * d, d));
  b.mlp_b2 = params_.add(prefix + ".mlp.b2", Tensor::zeros({d}));
  return b;
}

CalicoModel::DecoderBlock CalicoModel::view_decoder_block(const std::string& prefix) {
  DecoderBlock b;
  b.ln_gain = params_.at(prefix + ".ln1.gain");
  b.ln_bias = params_.at(prefix + ".ln1.bias");
  b.attn = attention_view(params_, prefix + ".attn", config_.heads);
  b.ln2_gain = params_.at(prefix + ".ln2.gain");
  b.ln2_bias = params_.at(prefix + ".ln2.bias");
  b.mlp_w1 = params_.at(prefix + ".mlp.w1");
  b.mlp_b1 = params_.at(prefix + ".mlp.b1");
  b.mlp_w2 = params_.at(prefix + ".mlp.w2");
  b.mlp_b2 = params_.at(prefix + ".mlp.b2");
  return b;
}

CalicoModel::CalicoModel(const ModelConfig& config, uint64_t seed)
    : config_(config), tokenizer_(config.N_I_max) {
  config_.validate();
  if (config_.vocab < tokenizer_.vocab_floor()) {
    throw ConfigError(msg("config: vocab (", config_.vocab, ") below tokenizer floor (",
                          tokenizer_.vocab_floor(), ")"));
  }
  if (!config_.use_qformer &&
      (config_.S_I != config_.S_C || config_.D_I != config_.D_C)) {
    throw ConfigError(
        "config: use_qformer=false requires S_I == S_C and D_I == D_C "
        "(direct projection keeps the encoder sequence)");
  }
  Rng rng(seed);

  // Base modules draw from the RNG first so CEM/CAM-ablated variants share
  // identical base initializations at equal seeds.
  global_enc_ = ToyEncoder(params_, "global_enc", config_.H, config_.W, config_.S_C,
                           config_.D_C, config_.heads, rng);
  q_ = params_.add("qformer.q", normal_init(rng, {config_.S_I, config_.D_I}, 0.02));
  qformer_ = make_attention(params_, "qformer.attn",
                            {.query_width = config_.D_I, .kv_width = config_.D_C,
                             .inner_width = config_.D_I, .out_width = config_.D_I,
                             .heads = config_.heads},
                            rng);
  f_image_w_ = params_.add("f_image.w", glorot(rng, config_.D_I, config_.D));
  f_image_b_ = params_.add("f_image.b", Tensor::zeros({config_.D}));
  llm_ = ToyLlm(params_, "llm", config_.vocab, config_.D, config_.N, config_.heads, rng);

  grounding_enc_ = ToyEncoder(params_, "grounding_enc", config_.H, config_.W,
                              config_.S_D, config_.D_D, config_.heads, rng,
                              /*trainable=*/false);
  f_seg_w_ = params_.add("f_segmentation.w", glorot(rng, config_.D, config_.D_D));
  f_seg_b_ = params_.add("f_segmentation.b", Tensor::zeros({config_.D_D}));
  dec1_ = make_decoder_block("decoder.block1", rng);
  dec2_ = make_decoder_block("decoder.block2", rng);
  dec_feat_w_ = params_.add("decoder.feat.w", glorot(rng, config_.D_D, config_.D_D));
  dec_feat_b_ = params_.add("decoder.feat.b", Tensor::zeros({config_.D_D}));

  if (config_.cem_enabled && config_.cem_use_semantic_encoder) {
    semantic_enc_ = ToyEncoder(params_, "semantic_enc", config_.H, config_.W,
                               config_.S_S, config_.D_S, config_.heads, rng);
    cem_ = CemModule(params_, "cem", config_.D_C, config_.D_S, config_.heads, rng);
  }
  if (config_.cam_enabled) {
    cam_layers_ = config_.cam_layers_override.empty()
                      ? plan_cam_layers(config_.N, config_.cam_k)
                      : config_.cam_layers_override;
    cam_ = CamModule(params_, "cam", cam_layers_, config_.D, config_.D_I, rng);
    if (!config_.cam_share_qformer) {
      cam_qformer_ = make_attention(params_, "cam.qformer",
                                    {.query_width = config_.D_I, .kv_width = config_.D_C,
                                     .inner_width = config_.D_I,
                                     .out_width = config_.D_I, .heads = config_.heads},
                                    rng);
    }
  }
}

void CalicoModel::build_views() {
  global_enc_ = ToyEncoder::view(params_, "global_enc", config_.H, config_.W,
                                 config_.S_C, config_.D_C, config_.heads);
  q_ = params_.at("qformer.q");
  qformer_ = attention_view(params_, "qformer.attn", config_.heads);
  f_image_w_ = params_.at("f_image.w");
  f_image_b_ = params_.at("f_image.b");
  llm_ = ToyLlm::view(params_, "llm", config_.vocab, config_.D, config_.N, config_.heads);
  grounding_enc_ = ToyEncoder::view(params_, "grounding_enc", config_.H, config_.W,
                                    config_.S_D, config_.D_D, config_.heads);
  f_seg_w_ = params_.at("f_segmentation.w");
  f_seg_b_ = params_.at("f_segmentation.b");
  dec1_ = view_decoder_block("decoder.block1");
  dec2_ = view_decoder_block("decoder.block2");
  dec_feat_w_ = params_.at("decoder.feat.w");
  dec_feat_b_ = params_.at("decoder.feat.b");
  if (config_.cem_enabled && config_.cem_use_semantic_encoder) {
    semantic_enc_ = ToyEncoder::view(params_, "semantic_enc", config_.H, config_.W,
                                     config_.S_S, config_.D_S, config_.heads);
    cem_ = CemModule::view(params_, "cem", config_.heads);
  }
  if (config_.cam_enabled) {
    cam_ = CamModule::view(params_, "cam", cam_layers_);
    if (!config_.cam_share_qformer) {
      cam_qformer_ = attention_view(params_, "cam.qformer", config_.heads);
    }
  }
}

CalicoModel CalicoModel::view_over(const CalicoModel& base, ParamSet&& clone) {
  CalicoModel m;
  m.config_ = base.config_;
  m.tokenizer_ = base.tokenizer_;
  m.cam_layers_ = base.cam_layers_;
  m.params_ = std::move(clone);
  m.build_views();
  return m;
}

Tensor CalicoModel::encode_global(const ImageBatch& images) const {
  images.validate(config_.H, config_.W, config_.N_I_max);
  return global_enc_.encode(images);
}

Tensor CalicoModel::extract_semantic(const ImageBatch& images) const {
  if (!(config_.cem_enabled && config_.cem_use_semantic_encoder)) {
    throw ConfigError("semantic encoder disabled by configuration");
  }
  images.validate(config_.H, config_.W, config_.N_I_max);
  return semantic_enc_.encode(images);
}

Tensor CalicoModel::encode_grounding(const ImageBatch& images) const {
  images.validate(config_.H, config_.W, config_.N_I_max);
  return grounding_enc_.encode(images);
}

Tensor CalicoModel::qformer_query(const Tensor& x_global) const {
  if (!config_.use_qformer) return x_global;  // direct-projection ablation
  if (x_global.rank() != 3 || x_global.dim(2) != config_.D_C) {
    throw ConfigError(msg("qformer: expected (N_I,S_C,", config_.D_C, "), got ",
                          shape_str(x_global.shape())));
  }
  std::vector<Tensor> per_image;
  per_image.reserve(x_global.dim(0));
  for (int64_t j = 0; j < x_global.dim(0); ++j) {
    per_image.push_back(cross_attention(q_, index0(x_global, j), qformer_));
  }
  return stack0(per_image);
}

Tensor CalicoModel::project_to_language(const Tensor& x_embed) const {
  if (x_embed.rank() != 3 || x_embed.dim(2) != config_.D_I) {
    throw ConfigError(msg("f_image: expected (N_I,S_I,", config_.D_I, "), got ",
                          shape_str(x_embed.shape())));
  }
  return add(matmul(x_embed, f_image_w_), f_image_b_);
}

Tensor CalicoModel::fused_globals(const ImageBatch& images, const Tensor& x_global) const {
  if (!config_.cem_enabled || !config_.cem_use_semantic_encoder) return x_global;
  return cem_.fuse(x_global, extract_semantic(images));
}

HookMap CalicoModel::make_cam_hooks(const Tensor& x_global_fused,
                                    const TokenSequence& seq) const {
  HookMap hooks;
  if (!config_.cam_enabled) return hooks;
  int64_t last_text = seq.last_text_pos();
  if (last_text < 0) throw AssemblyError("cam: sequence has no text token");
  AttentionParams qf = config_.cam_share_qformer ? qformer_ : cam_qformer_;
  for (int64_t layer : cam_layers_) {
    hooks[layer] = [this, qf, x_global_fused, seq, last_text](const Tensor& t_l,
                                                              int64_t l) {
      Tensor state = reshape(slice_rows(t_l, last_text, 1), {config_.D});
      Tensor q_prime = cam_.guidance(state, q_, l);
      Tensor x_embed_prime = cam_.extract(q_prime, x_global_fused, qf);

      std::vector<Tensor> gathered;
      gathered.reserve(seq.n_images);
      for (int64_t j = 1; j <= seq.n_images; ++j) {
        gathered.push_back(
            slice_rows(t_l, seq.image_slot_start(j), seq.slots_per_image));
      }
      Tensor i_l = stack0(gathered);
      Tensor i_fused = cam_.inject(i_l, x_embed_prime, l);

      // Re-assemble: text rows verbatim from t_l, image rows from i_fused.
      std::vector<Tensor> sources{t_l};
      for (int64_t j = 0; j < seq.n_images; ++j) sources.push_back(index0(i_fused, j));
      std::vector<std::pair<int, int64_t>> picks;
      picks.reserve(seq.items.size());
      for (int64_t pos = 0; pos < seq.length(); ++pos) {
        const SeqItem& it = seq.items[pos];
        if (it.kind == SeqItem::Kind::Text) {
          picks.emplace_back(0, pos);
        } else {
          picks.emplace_back(static_cast<int>(it.image_index), it.slot);
        }
      }
      return compose_rows(sources, picks);
    };
  }
  return hooks;
}

ForwardResult CalicoModel::forward(const ImageBatch& images,
                                   const TokenSequence& seq) const {
  ForwardResult r;
  r.x_global = encode_global(images);
  Tensor x_embed = qformer_query(r.x_global);
  r.image_tokens = project_to_language(x_embed);
  Tensor t0 = assemble_input(seq, llm_.embedding_table(), r.image_tokens);
  r.x_global_fused = config_.cam_enabled ? fused_globals(images, r.x_global)
                                         : r.x_global;
  HookMap hooks = make_cam_hooks(r.x_global_fused, seq);
  LlmOutputs out = llm_.forward(t0, hooks);
  r.hidden = out.hidden;
  r.logits = out.logits;
  return r;
}

GenerateResult CalicoModel::generate(const ImageBatch& images,
                                     const TokenSequence& prompt,
                                     int64_t max_steps) const {
  if (max_steps < 1) throw ConfigError("generate: max_steps must be >= 1");
  GenerateResult res;
  res.sequence = prompt;
  for (int64_t step = 0; step < max_steps; ++step) {
    ForwardResult fr = forward(images, res.sequence);
    int64_t last = res.sequence.length() - 1;
    // Greedy argmax; ties break toward the lowest token id.
    int64_t best = 0;
    double best_v = fr.logits.at({last, 0});
    for (int64_t v = 1; v < config_.vocab; ++v) {
      double lv = fr.logits.at({last, v});
      if (lv > best_v) {
        best_v = lv;
        best = v;
      }
    }
    if (best == Tokenizer::kEos) break;
    res.sequence.append_text(best);
    res.tokens.push_back(best);
    res.positions.push_back(res.sequence.length() - 1);
  }
  ForwardResult harvest = forward(images, res.sequence);
  res.hidden = harvest.hidden;
  return res;
}

Tensor CalicoModel::decoder_block_forward(const DecoderBlock& b, const Tensor& query,
                                          const Tensor& keys) const {
  Tensor h = add(query, cross_attention(layer_norm(query, b.ln_gain, b.ln_bias), keys,
                                        b.attn));
  Tensor m = linear(gelu(linear(layer_norm(h, b.ln2_gain, b.ln2_bias), b.mlp_w1,
                                b.mlp_b1)),
                    b.mlp_w2, b.mlp_b2);
  return add(h, m);
}

std::vector<Tensor> CalicoModel::decode_masks(const Tensor& x_ground_i,
                                              const Tensor& seg_states) const {
  if (x_ground_i.rank() != 2 || x_ground_i.dim(0) != config_.S_D ||
      x_ground_i.dim(1) != config_.D_D) {
    throw DimensionError(msg("decode_masks: grounding embedding ",
                             shape_str(x_ground_i.shape()), " vs (", config_.S_D, "x",
                             config_.D_D, ")"));
  }
  std::vector<Tensor> masks;
  if (!seg_states.defined() || seg_states.numel() == 0) return masks;
  if (seg_states.rank() != 2 || seg_states.dim(1) != config_.D) {
    throw DimensionError(msg("decode_masks: seg states ",
                             shape_str(seg_states.shape()), " vs width ", config_.D));
  }
  int64_t pixels = config_.H * config_.W;
  int64_t block = pixels / config_.S_D;
  std::vector<int64_t> pixel_to_patch(static_cast<size_t>(pixels));
  for (int64_t p = 0; p < pixels; ++p) pixel_to_patch[p] = p / block;

  Tensor mask_feat = linear(x_ground_i, dec_feat_w_, dec_feat_b_);
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(config_.D_D));
  for (int64_t s = 0; s < seg_states.dim(0); ++s) {
    Tensor q = linear(slice_rows(seg_states, s, 1), f_seg_w_, f_seg_b_);
    q = decoder_block_forward(dec1_, q, x_ground_i);
    q = decoder_block_forward(dec2_, q, x_ground_i);
    Tensor patch_logits = scale(matmul(mask_feat, transpose_last2(q)), inv_sqrt);
    Tensor pixel_logits = gather_rows(reshape(patch_logits, {config_.S_D, 1}),
                                      pixel_to_patch);
    masks.push_back(reshape(pixel_logits, {config_.H, config_.W}));
  }
  return masks;
}

TokenSequence CalicoModel::tokenize(const std::string& prompt_template,
                                    const ImageBatch& images) const {
  return tokenize_prompt(prompt_template, images, tokenizer_, config_.S_I);
}

}  // namespace calico
