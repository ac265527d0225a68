#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "calico/parser.hpp"
#include "calico/tensor.hpp"

namespace calico {

struct BinaryMask {
  int64_t height = 0, width = 0;
  std::vector<uint8_t> pixels;  // row-major, values 0/1

  int64_t area() const;
  bool empty_mask() const { return area() == 0; }
  static BinaryMask zeros(int64_t h, int64_t w);
  static BinaryMask rect(int64_t h, int64_t w, int64_t r0, int64_t c0, int64_t r1,
                         int64_t c1);  // half-open [r0,r1) x [c0,c1)
};

struct MaskEntry {
  std::string label;
  BinaryMask mask;
};

struct MaskSet {
  int64_t image_index = 0;  // 1-based
  std::vector<MaskEntry> entries;
};

// Uncompressed row-major RLE: alternating 0-run/1-run lengths, starting with
// the 0-run (possibly length 0).
std::vector<int64_t> rle_encode(const BinaryMask& mask);
BinaryMask rle_decode(const std::vector<int64_t>& runs, int64_t height, int64_t width);

// MaskSet JSON: {"image_index": k, "entries": [{"label": ..., "rle": [...]}]}.
std::string maskset_to_json(const MaskSet& set);
MaskSet maskset_from_json_text(const std::string& text, int64_t height, int64_t width);

// sigmoid(logit) > 0.5, i.e. logit > 0.
BinaryMask binarize_logits(const Tensor& logits_hw);

// Bound span/mask pair with its resolved text label.
struct GroundedSpan {
  std::string label;
  int64_t image_index = 0;
  Tensor seg_state;  // (D)
};

// Routes decoded masks to per-image MaskSets by each span's image index.
// Labels are whitespace-normalized and lowercased here.
std::vector<MaskSet> bind_masks(const std::vector<SpanSkeleton>& spans,
                                const std::vector<BinaryMask>& masks,
                                const Tokenizer& tok, int64_t n_images);

}  // namespace calico
