#pragma once

#include <vector>

#include "calico/params.hpp"

namespace calico {

struct OptimizerConfig {
  double base_lr = 4e-4;
  int64_t warmup_steps = 100;
  int64_t total_steps = 500;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double grad_clip = 1.0;     // global-norm threshold; <= 0 disables
  double weight_decay = 0.0;  // decoupled
};

// Linear warmup to base_lr, then linear decay to 0 at total_steps.
double lr_at_step(int64_t step, const OptimizerConfig& cfg);

// AdamW with bias correction, global-norm clipping and decoupled decay.
// A non-finite gradient aborts the step without advancing the counter.
class AdamW {
 public:
  explicit AdamW(const OptimizerConfig& cfg) : cfg_(cfg) {}

  // Reads each trainable parameter's accumulated gradient (absent = zero),
  // applies the update in insertion order and clears gradients.
  void step(ParamSet& params);

  int64_t steps_taken() const { return step_; }
  double last_lr() const { return last_lr_; }
  const OptimizerConfig& config() const { return cfg_; }

 private:
  OptimizerConfig cfg_;
  int64_t step_ = 0;
  double last_lr_ = 0.0;
  std::vector<std::vector<double>> m_, v_;  // per parameter, lazily sized
};

}  // namespace calico
