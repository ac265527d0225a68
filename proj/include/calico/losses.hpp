#pragma once

#include <vector>

#include "calico/maskset.hpp"
#include "calico/ops.hpp"

namespace calico {

struct LossWeights {
  double lambda_text = 1.0;
  double lambda_focal = 2.0;
  double lambda_dice = 0.5;
  double gamma = 2.0;

  void validate() const;
};

// Mean causal cross-entropy over scored positions. targets[p] is the token
// the row-p logits predict (already right-shifted); mask selects scored rows.
Tensor text_loss(const Tensor& logits, const std::vector<int64_t>& targets,
                 const std::vector<bool>& scored);

// Mean over pixels of (1 - p_t)^gamma * (-ln p_t) with p = sigmoid(logit).
Tensor focal_loss(const Tensor& logits_hw, const BinaryMask& target, double gamma);

// 1 - (2*sum(p*t) + eps) / (sum(p) + sum(t) + eps); pred in [0,1].
Tensor dice_loss(const Tensor& probs_hw, const BinaryMask& target, double eps = 1.0);

struct CombinedLoss {
  Tensor total;
  double text = 0.0, focal = 0.0, dice = 0.0;  // component values
};

// lambda_text * L_text + lambda_focal * mean focal + lambda_dice * mean Dice
// over the aligned (prediction, ground-truth) mask pairs.
CombinedLoss combined_loss(const Tensor& text, const std::vector<Tensor>& mask_logits,
                           const std::vector<BinaryMask>& targets,
                           const LossWeights& weights);

}  // namespace calico
