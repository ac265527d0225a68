#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "calico/errors.hpp"

namespace calico {

// Byte-level tokenizer: ids 0..255 are raw bytes, reserved ids follow for
// PAD/BOS/EOS, the <image> placeholder, [SEG], grounding tags and the
// per-image identifiers (IMAGE1)..(IMAGEn). Special tokens are inserted only
// through encode(); plain text never merges into them.
class Tokenizer {
 public:
  static constexpr int64_t kPad = 256;
  static constexpr int64_t kBos = 257;
  static constexpr int64_t kEos = 258;
  static constexpr int64_t kImage = 259;   // <image> placeholder
  static constexpr int64_t kSeg = 260;     // [SEG]
  static constexpr int64_t kPOpen = 261;   // <p>
  static constexpr int64_t kPClose = 262;  // </p>
  static constexpr int64_t kFirstImageRef = 263;

  explicit Tokenizer(int64_t n_image_ids = 8, bool image_refs_as_text = false);

  int64_t n_image_ids() const { return n_image_ids_; }
  bool image_refs_as_text() const { return image_refs_as_text_; }
  // Smallest vocabulary that can hold every reserved id.
  int64_t vocab_floor() const { return kFirstImageRef + n_image_ids_; }

  // Byte-only encoding: never produces special ids.
  std::vector<int64_t> encode_text(const std::string& text) const;
  // Recognizes special token strings as dedicated ids.
  std::vector<int64_t> encode(const std::string& text) const;
  std::string decode(const std::vector<int64_t>& ids) const;
  std::string decode_one(int64_t id) const;

  int64_t image_ref_id(int64_t k) const;  // 1-based identifier index
  bool is_image_ref(int64_t id) const;
  int64_t image_ref_index(int64_t id) const;  // 1-based; throws if not a ref
  bool is_special(int64_t id) const { return id >= kPad && id < vocab_floor(); }

  static std::string special_string(int64_t id, int64_t image_ref_index = 0);

 private:
  int64_t n_image_ids_;
  bool image_refs_as_text_;
};

}  // namespace calico
