#pragma once

#include <string>
#include <vector>

#include "calico/tensor.hpp"
#include "calico/tokenizer.hpp"

namespace calico {

// N_I images, each a 3xHxW tensor in [0,1], addressed as (IMAGE1)..(IMAGEn).
struct ImageBatch {
  std::vector<Tensor> images;

  int64_t count() const { return static_cast<int64_t>(images.size()); }
  void validate(int64_t h, int64_t w, int64_t n_i_max) const;
};

struct SeqItem {
  enum class Kind { Text, ImageSlot };
  Kind kind = Kind::Text;
  int64_t token_id = -1;   // Text
  int64_t image_index = 0; // ImageSlot, 1-based
  int64_t slot = 0;        // ImageSlot, 0..S_I-1
};

// Interleaved text/image-slot stream (T^0 layout). Each image contributes
// exactly slots_per_image contiguous slots; S = S_T + N_I * S_I.
struct TokenSequence {
  std::vector<SeqItem> items;
  int64_t slots_per_image = 0;
  int64_t n_images = 0;

  int64_t length() const { return static_cast<int64_t>(items.size()); }
  int64_t text_count() const;
  int64_t last_text_pos() const;  // -1 when no text items
  int64_t image_slot_start(int64_t image_index) const;
  std::vector<int64_t> text_token_ids() const;

  void append_text(int64_t token_id);
  void validate() const;
};

// Reads a plain-text template file (one prompt, possibly multi-line).
std::string load_prompt_template(const std::string& path);

// Expands the template's <image> placeholders into S_I slots each. The k-th
// placeholder must be followed by its identifier (IMAGEk); a BOS token opens
// the sequence and identifiers stay in the text stream.
TokenSequence tokenize_prompt(const std::string& prompt_template,
                              const ImageBatch& images, const Tokenizer& tok,
                              int64_t slots_per_image);

// Row i of the result is the text embedding or the designated image token,
// in exactly the order of seq.items. image_tokens: (N_I, S_I, D).
Tensor assemble_input(const TokenSequence& seq, const Tensor& embedding_table,
                      const Tensor& image_tokens);

}  // namespace calico
