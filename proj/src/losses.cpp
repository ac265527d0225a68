#include "calico/losses.hpp"

namespace calico {

void LossWeights::validate() const {
  if (lambda_text < 0 || lambda_focal < 0 || lambda_dice < 0 || gamma < 0) {
    throw TrainingError("loss weights must be nonnegative");
  }
}

Tensor text_loss(const Tensor& logits, const std::vector<int64_t>& targets,
                 const std::vector<bool>& scored) {
  if (logits.rank() != 2) throw DimensionError("text_loss: logits must be (S, vocab)");
  int64_t s = logits.dim(0);
  if (static_cast<int64_t>(targets.size()) != s ||
      static_cast<int64_t>(scored.size()) != s) {
    throw DimensionError(msg("text_loss: ", targets.size(), " targets / ",
                             scored.size(), " mask entries vs ", s, " rows"));
  }
  int64_t count = 0;
  std::vector<int64_t> safe_targets(targets.size(), 0);
  std::vector<double> mask(targets.size(), 0.0);
  for (int64_t i = 0; i < s; ++i) {
    if (!scored[i]) continue;
    if (targets[i] < 0 || targets[i] >= logits.dim(1)) {
      throw DimensionError(msg("text_loss: target ", targets[i], " outside vocab ",
                               logits.dim(1)));
    }
    safe_targets[i] = targets[i];
    mask[i] = 1.0;
    ++count;
  }
  if (count == 0) throw TrainingError("text_loss: all positions masked out");
  Tensor log_probs = log_softmax(logits, -1);
  Tensor picked = take_per_row(log_probs, safe_targets);
  Tensor masked = mul(picked, Tensor::from({s}, mask));
  return scale(sum(masked), -1.0 / static_cast<double>(count));
}

namespace {

Tensor target_tensor(const BinaryMask& target, const Shape& like) {
  if (like != Shape{target.height, target.width}) {
    throw DimensionError(msg("mask loss: prediction ", shape_str(like), " vs target (",
                             target.height, "x", target.width, ")"));
  }
  std::vector<double> values(target.pixels.size());
  for (size_t i = 0; i < values.size(); ++i) {
    if (target.pixels[i] != 0 && target.pixels[i] != 1) {
      throw InputError("mask loss: target not binary");
    }
    values[i] = static_cast<double>(target.pixels[i]);
  }
  return Tensor::from({target.height, target.width}, std::move(values));
}

}  // namespace

Tensor focal_loss(const Tensor& logits_hw, const BinaryMask& target, double gamma) {
  if (logits_hw.rank() != 2) throw DimensionError("focal_loss: logits must be (H, W)");
  Tensor t = target_tensor(target, logits_hw.shape());
  // x_signed = x where t==1 else -x; then
  //   -ln p_t       = softplus(-x_signed)
  //   (1 - p_t)^g   = exp(-g * softplus(x_signed))
  Tensor sign = add_const(scale(t, 2.0), -1.0);
  Tensor x_signed = mul(logits_hw, sign);
  Tensor modulator = exp(scale(softplus(x_signed), -gamma));
  Tensor ce = softplus(neg(x_signed));
  return mean(mul(modulator, ce));
}

Tensor dice_loss(const Tensor& probs_hw, const BinaryMask& target, double eps) {
  if (probs_hw.rank() != 2) throw DimensionError("dice_loss: probs must be (H, W)");
  for (double v : probs_hw.data()) {
    if (v < 0.0 || v > 1.0) throw InputError(msg("dice_loss: probability ", v, " outside [0,1]"));
  }
  Tensor t = target_tensor(target, probs_hw.shape());
  Tensor numerator = add_const(scale(sum(mul(probs_hw, t)), 2.0), eps);
  Tensor denominator = add_const(add(sum(probs_hw), sum(t)), eps);
  return add_const(neg(div(numerator, denominator)), 1.0);
}

CombinedLoss combined_loss(const Tensor& text, const std::vector<Tensor>& mask_logits,
                           const std::vector<BinaryMask>& targets,
                           const LossWeights& weights) {
  weights.validate();
  if (mask_logits.size() != targets.size()) {
    throw TrainingError(msg("combined_loss: ", mask_logits.size(),
                            " predictions vs ", targets.size(), " ground-truth masks"));
  }
  CombinedLoss out;
  out.text = text.value();
  Tensor total = scale(text, weights.lambda_text);
  if (!mask_logits.empty()) {
    Tensor focal_sum, dice_sum;
    for (size_t i = 0; i < mask_logits.size(); ++i) {
      Tensor f = focal_loss(mask_logits[i], targets[i], weights.gamma);
      Tensor d = dice_loss(sigmoid(mask_logits[i]), targets[i]);
      focal_sum = i == 0 ? f : add(focal_sum, f);
      dice_sum = i == 0 ? d : add(dice_sum, d);
    }
    double inv = 1.0 / static_cast<double>(mask_logits.size());
    Tensor focal_mean = scale(focal_sum, inv);
    Tensor dice_mean = scale(dice_sum, inv);
    out.focal = focal_mean.value();
    out.dice = dice_mean.value();
    total = add(total, add(scale(focal_mean, weights.lambda_focal),
                           scale(dice_mean, weights.lambda_dice)));
  }
  out.total = total;
  return out;
}

}  // namespace calico
