#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "calico/tensor.hpp"

namespace calico {

// Deterministic, platform-independent RNG (splitmix64 core with hand-rolled
// uniform/normal so streams are identical everywhere).
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);
  double normal();                       // standard normal, Box-Muller
  int64_t uniform_int(int64_t lo, int64_t hi);  // inclusive bounds

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

struct Parameter {
  std::string name;
  Tensor tensor;
  bool trainable = true;
};

// Named parameter collection with stable insertion order; order fixes the
// deterministic reduction/update sequence.
class ParamSet {
 public:
  Tensor& add(const std::string& name, Tensor tensor, bool trainable = true);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  Parameter& param(const std::string& name);
  bool contains(const std::string& name) const;

  size_t size() const { return items_.size(); }
  std::vector<Parameter>& items() { return items_; }
  const std::vector<Parameter>& items() const { return items_; }

  void zero_grad();
  int64_t total_elements(bool trainable_only = false) const;

  // Shares data buffers, independent grad storage (per-worker gradients).
  ParamSet shallow_clone() const;

  // Flat binary checkpoint: magic "CALI", version u32, then per parameter
  // u32 name length, name bytes, u32 rank, u64 extents, little-endian f64.
  void save(const std::string& path) const;
  void load(const std::string& path);  // shapes must match existing entries

 private:
  std::vector<Parameter> items_;
  std::unordered_map<std::string, size_t> index_;
};

// Common initializers.
Tensor glorot(Rng& rng, int64_t fan_in, int64_t fan_out);
Tensor normal_init(Rng& rng, Shape shape, double std_dev);

}  // namespace calico
