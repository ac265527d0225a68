#pragma once

#include <optional>
#include <string>
#include <vector>

#include "calico/config.hpp"
#include "calico/correspondence.hpp"
#include "calico/llm.hpp"
#include "calico/sequence.hpp"

namespace calico {

struct ForwardResult {
  Tensor logits;          // (S, vocab)
  Tensor hidden;          // (S, D) final-layer states (post final norm)
  Tensor x_global;        // (N_I, S_C, D_C)
  Tensor x_global_fused;  // equals x_global when CEM is bypassed
  Tensor image_tokens;    // I^0 (N_I, S_I, D)
};

struct GenerateResult {
  std::vector<int64_t> tokens;        // emitted ids, EOS excluded
  std::vector<int64_t> positions;     // sequence positions of emitted ids
  Tensor hidden;                      // (S_final, D) from the harvest pass
  TokenSequence sequence;             // prompt plus emitted text
};

// Full pipeline: encoders -> Q-Former -> projection -> interleaved assembly
// -> LLM with CAM hooks. Ablation switches in ModelConfig bypass CEM/CAM/
// Q-Former structurally.
class CalicoModel {
 public:
  CalicoModel(const ModelConfig& config, uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const Tokenizer& tokenizer() const { return tokenizer_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  const std::vector<int64_t>& cam_layers() const { return cam_layers_; }

  // Stage ops (each usable standalone; forward() wires them together).
  Tensor encode_global(const ImageBatch& images) const;
  Tensor extract_semantic(const ImageBatch& images) const;
  Tensor encode_grounding(const ImageBatch& images) const;
  Tensor qformer_query(const Tensor& x_global) const;        // (N_I,S_I,D_I)
  Tensor project_to_language(const Tensor& x_embed) const;   // (N_I,S_I,D)
  Tensor fused_globals(const ImageBatch& images, const Tensor& x_global) const;

  ForwardResult forward(const ImageBatch& images, const TokenSequence& seq) const;
  GenerateResult generate(const ImageBatch& images, const TokenSequence& prompt,
                          int64_t max_steps) const;

  // Decodes one mask logit map (H, W) per SEG state (S_j, D) against one
  // image's grounding embedding (S_D, D_D).
  std::vector<Tensor> decode_masks(const Tensor& x_ground_i,
                                   const Tensor& seg_states) const;

  TokenSequence tokenize(const std::string& prompt_template,
                         const ImageBatch& images) const;

  // Rebuilds the module views over a shallow-cloned ParamSet (worker threads).
  static CalicoModel view_over(const CalicoModel& base, ParamSet&& clone);

  const Tensor& query_tokens() const { return q_; }
  const CamModule& cam() const { return cam_; }
  const CemModule& cem() const { return cem_; }
  const ToyLlm& llm() const { return llm_; }

 private:
  CalicoModel() = default;
  void build_views();
  HookMap make_cam_hooks(const Tensor& x_global_fused, const TokenSequence& seq) const;

  ModelConfig config_;
  Tokenizer tokenizer_{8};
  ParamSet params_;
  std::vector<int64_t> cam_layers_;

  ToyEncoder global_enc_, semantic_enc_, grounding_enc_;
  Tensor q_;                    // learnable query tokens (S_I, D_I)
  AttentionParams qformer_;     // shared querying module
  AttentionParams cam_qformer_; // separate weights when not shared
  Tensor f_image_w_, f_image_b_;
  ToyLlm llm_;
  CemModule cem_;
  CamModule cam_;

  // Pixel decoder: f_segmentation projection + two cross-attention blocks +
  // per-patch head upsampled to pixels.
  Tensor f_seg_w_, f_seg_b_;
  struct DecoderBlock {
    Tensor ln_gain, ln_bias;
    AttentionParams attn;
    Tensor ln2_gain, ln2_bias, mlp_w1, mlp_b1, mlp_w2, mlp_b2;
  };
  DecoderBlock dec1_, dec2_;
  Tensor dec_feat_w_, dec_feat_b_;

  DecoderBlock make_decoder_block(const std::string& prefix, Rng& rng);
  DecoderBlock view_decoder_block(const std::string& prefix);
  Tensor decoder_block_forward(const DecoderBlock& b, const Tensor& query,
                               const Tensor& keys) const;
};

}  // namespace calico
