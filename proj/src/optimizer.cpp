#include "calico/optimizer.hpp"

#include <cmath>

namespace calico {

double lr_at_step(int64_t step, const OptimizerConfig& cfg) {
  if (step < 1) throw TrainingError("lr schedule: step counts from 1");
  if (cfg.warmup_steps > 0 && step <= cfg.warmup_steps) {
    return cfg.base_lr * static_cast<double>(step) /
           static_cast<double>(cfg.warmup_steps);
  }
  if (cfg.total_steps <= cfg.warmup_steps) return cfg.base_lr;
  double remaining = static_cast<double>(cfg.total_steps - step) /
                     static_cast<double>(cfg.total_steps - cfg.warmup_steps);
  return cfg.base_lr * std::max(0.0, remaining);
}

void AdamW::step(ParamSet& params) {
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
  }
  if (m_.size() != params.size()) {
    throw TrainingError("optimizer bound to a different parameter set");
  }

  // Validate and measure gradients before touching anything: a bad gradient
  // must leave parameters and moments untouched.
  double sq_norm = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    const Parameter& p = params.items()[pi];
    if (!p.trainable || !p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) {
      if (!std::isfinite(g)) {
        throw TrainingError(msg("optimizer: non-finite gradient in ", p.name,
                                "; step skipped"));
      }
      sq_norm += g * g;
    }
  }
  double clip_scale = 1.0;
  if (cfg_.grad_clip > 0.0) {
    double norm = std::sqrt(sq_norm);
    if (norm > cfg_.grad_clip) clip_scale = cfg_.grad_clip / norm;
  }

  ++step_;
  double lr = lr_at_step(step_, cfg_);
  last_lr_ = lr;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));

  for (size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = params.items()[pi];
    if (!p.trainable) continue;
    size_t n = static_cast<size_t>(p.tensor.numel());
    if (m_[pi].empty()) {
      m_[pi].assign(n, 0.0);
      v_[pi].assign(n, 0.0);
    }
    const std::vector<double>* grad = p.tensor.has_grad() ? &p.tensor.grad() : nullptr;
    std::vector<double>& w = p.tensor.mutable_data();
    for (size_t i = 0; i < n; ++i) {
      double g = grad ? (*grad)[i] * clip_scale : 0.0;
      m_[pi][i] = cfg_.beta1 * m_[pi][i] + (1.0 - cfg_.beta1) * g;
      v_[pi][i] = cfg_.beta2 * v_[pi][i] + (1.0 - cfg_.beta2) * g * g;
      double m_hat = m_[pi][i] / bc1;
      double v_hat = v_[pi][i] / bc2;
      w[i] -= lr * (m_hat / (std::sqrt(v_hat) + cfg_.eps) + cfg_.weight_decay * w[i]);
    }
  }
  params.zero_grad();
}

}  // namespace calico
