#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "calico/errors.hpp"

namespace calico {

// Flat key=value file ('#' comments, blank lines ignored). Consumers mark
// keys as they claim them so the CLI can reject typos.
class KeyValues {
 public:
  KeyValues() = default;
  static KeyValues from_file(const std::string& path);
  static KeyValues from_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_str(const std::string& key, const std::string& fallback) const;
  int64_t get_i64(const std::string& key, int64_t fallback) const;
  double get_f64(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<int64_t> get_i64_list(const std::string& key) const;  // comma separated

  void set(const std::string& key, const std::string& value);
  std::vector<std::string> unconsumed() const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> consumed_;
};

struct ModelConfig {
  int64_t N_I_max = 8;   // image identifier cap
  int64_t H = 16, W = 16;
  int64_t S_C = 64, D_C = 64;  // global encoder
  int64_t S_S = 48, D_S = 48;  // semantic encoder
  int64_t S_I = 32, D_I = 64;  // query tokens (paper's per-image token count)
  int64_t D = 256;
  int64_t N = 32;
  int64_t S_D = 64, D_D = 64;  // grounding encoder
  int64_t vocab = 384;
  int64_t heads = 4;

  // Ablation / wiring switches (Table-3-style structural variants).
  bool cem_enabled = true;
  bool cem_use_semantic_encoder = true;
  bool cam_enabled = true;
  int64_t cam_k = 2;
  std::vector<int64_t> cam_layers_override;
  bool cam_share_qformer = true;
  bool use_qformer = true;  // false: direct linear projection of X_global

  void validate() const;
  static ModelConfig from_kv(const KeyValues& kv);
  static ModelConfig from_file(const std::string& path);
  void write_file(const std::string& path) const;
  std::string to_text() const;
};

struct TrainConfig {
  int64_t steps = 500;
  int64_t batch = 0;  // 0 = whole dataset per step
  uint64_t seed = 0;
  double base_lr = 4e-4;
  int64_t warmup_steps = 100;
  int64_t total_steps = 0;  // 0 = steps
  double beta1 = 0.9, beta2 = 0.95;
  double grad_clip = 1.0;
  double weight_decay = 0.0;
  double lambda_text = 1.0, lambda_focal = 2.0, lambda_dice = 0.5;
  double gamma = 2.0;
  int64_t threads = 0;  // 0 = min(batch, hardware)

  static TrainConfig from_kv(const KeyValues& kv);
};

}  // namespace calico
