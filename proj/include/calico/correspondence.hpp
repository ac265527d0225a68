#pragma once

#include <string>
#include <vector>

#include "calico/encoders.hpp"

namespace calico {

// Evenly spaced injection layers for k modules in an N-layer stack:
// { ceil(i*N/(k+1)) : i = 1..k }. Strictly increasing.
std::vector<int64_t> plan_cam_layers(int64_t n_layers, int64_t k);

// Correspondence extraction: fuses semantic-encoder features into the global
// image embeddings with a residual cross-attention whose output projection is
// zero-initialized (identity at init).
class CemModule {
 public:
  CemModule() = default;
  CemModule(ParamSet& params, const std::string& prefix, int64_t d_c, int64_t d_s,
            int64_t heads, Rng& rng);
  static CemModule view(ParamSet& params, const std::string& prefix, int64_t heads);

  // x_global, x_semantic: (N_I, S_C, D_C), (N_I, S_S, D_S) -> (N_I, S_C, D_C).
  Tensor fuse(const Tensor& x_global, const Tensor& x_semantic) const;

 private:
  AttentionParams fusion_;
};

// One adaptation bundle per injection layer: f_adaptation (D -> D_I) builds
// the guidance that shifts the query tokens, f_reintegration (D_I -> D,
// zero-initialized) routes the re-queried features back into image rows.
class CamModule {
 public:
  CamModule() = default;
  CamModule(ParamSet& params, const std::string& prefix,
            const std::vector<int64_t>& layers, int64_t d, int64_t d_i, Rng& rng);
  static CamModule view(ParamSet& params, const std::string& prefix,
                        const std::vector<int64_t>& layers);

  const std::vector<int64_t>& layers() const { return layers_; }
  bool handles(int64_t layer) const;

  // q' = q + f_adaptation(t_state), broadcast over the S_I query rows.
  Tensor guidance(const Tensor& last_token_state, const Tensor& q, int64_t layer) const;
  // X'_embed = Q(q', X'_global) with the (shared or separate) querying params.
  Tensor extract(const Tensor& q_prime, const Tensor& x_global_fused,
                 const AttentionParams& qformer) const;
  // I^l_fused = I^l + f_reintegration(X'_embed); touches every row it is given.
  Tensor inject(const Tensor& i_l, const Tensor& x_embed_prime, int64_t layer) const;

 private:
  struct LayerParams {
    Tensor adapt_w, adapt_b, reint_w, reint_b;
  };
  const LayerParams& bundle(int64_t layer) const;

  std::vector<int64_t> layers_;
  std::vector<LayerParams> per_layer_;
};

}  // namespace calico
