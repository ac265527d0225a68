#include "calico/sequence.hpp"

#include <fstream>
#include <sstream>

#include "calico/ops.hpp"

namespace calico {

void ImageBatch::validate(int64_t h, int64_t w, int64_t n_i_max) const {
  if (images.empty() || count() > n_i_max) {
    throw DimensionError(msg("image batch size ", count(), " outside 1..", n_i_max));
  }
  Shape expected{3, h, w};
  for (size_t i = 0; i < images.size(); ++i) {
    if (images[i].shape() != expected) {
      throw DimensionError(msg("image ", i + 1, " has shape ",
                               shape_str(images[i].shape()), ", expected ",
                               shape_str(expected)));
    }
    for (double v : images[i].data()) {
      if (v < 0.0 || v > 1.0) {
        throw InputError(msg("image ", i + 1, " has pixel ", v, " outside [0,1]"));
      }
    }
  }
}

int64_t TokenSequence::text_count() const {
  int64_t n = 0;
  for (const SeqItem& it : items) n += it.kind == SeqItem::Kind::Text ? 1 : 0;
  return n;
}

int64_t TokenSequence::last_text_pos() const {
  for (int64_t i = length() - 1; i >= 0; --i) {
    if (items[i].kind == SeqItem::Kind::Text) return i;
  }
  return -1;
}

int64_t TokenSequence::image_slot_start(int64_t image_index) const {
  for (int64_t i = 0; i < length(); ++i) {
    if (items[i].kind == SeqItem::Kind::ImageSlot &&
        items[i].image_index == image_index && items[i].slot == 0) {
      return i;
    }
  }
  throw AssemblyError(msg("no slots found for image ", image_index));
}

void TokenSequence::append_text(int64_t token_id) {
  items.push_back(SeqItem{SeqItem::Kind::Text, token_id, 0, 0});
}

void TokenSequence::validate() const {
  std::vector<int64_t> counts(n_images + 1, 0);
  for (int64_t i = 0; i < length(); ++i) {
    const SeqItem& it = items[i];
    if (it.kind != SeqItem::Kind::ImageSlot) continue;
    if (it.image_index < 1 || it.image_index > n_images) {
      throw AssemblyError(msg("slot references image ", it.image_index,
                              " of ", n_images));
    }
    if (it.slot != counts[it.image_index]) {
      throw AssemblyError(msg("image ", it.image_index, " slots not contiguous at ", i));
    }
    if (it.slot > 0 &&
        (i == 0 || items[i - 1].kind != SeqItem::Kind::ImageSlot ||
         items[i - 1].image_index != it.image_index)) {
      throw AssemblyError(msg("image ", it.image_index, " slots interrupted at ", i));
    }
    ++counts[it.image_index];
  }
  for (int64_t j = 1; j <= n_images; ++j) {
    if (counts[j] != slots_per_image) {
      throw AssemblyError(msg("image ", j, " has ", counts[j], " slots, expected ",
                              slots_per_image));
    }
  }
  if (length() != text_count() + n_images * slots_per_image) {
    throw AssemblyError("sequence length identity S = S_T + N_I*S_I violated");
  }
}

std::string load_prompt_template(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError(msg("cannot open prompt template: ", path));
  std::stringstream buf;
  buf << is.rdbuf();
  std::string text = buf.str();
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

TokenSequence tokenize_prompt(const std::string& prompt_template,
                              const ImageBatch& images, const Tokenizer& tok,
                              int64_t slots_per_image) {
  const std::string placeholder = "<image>";
  int64_t n_images = images.count();

  // Placeholder census first: count mismatches are prompt errors regardless
  // of identifier layout.
  int64_t occurrences = 0;
  for (size_t p = prompt_template.find(placeholder); p != std::string::npos;
       p = prompt_template.find(placeholder, p + placeholder.size())) {
    ++occurrences;
  }
  if (occurrences != n_images) {
    throw PromptError(msg("prompt has ", occurrences, " <image> placeholders for ",
                          n_images, " images"));
  }

  TokenSequence seq;
  seq.slots_per_image = slots_per_image;
  seq.n_images = n_images;
  seq.append_text(Tokenizer::kBos);

  size_t cursor = 0;
  for (int64_t k = 1; k <= n_images; ++k) {
    size_t p = prompt_template.find(placeholder, cursor);
    std::string before = prompt_template.substr(cursor, p - cursor);
    for (int64_t id : tok.encode(before)) seq.append_text(id);
    for (int64_t s = 0; s < slots_per_image; ++s) {
      seq.items.push_back(SeqItem{SeqItem::Kind::ImageSlot, -1, k, s});
    }
    cursor = p + placeholder.size();
    // The identifier (IMAGEk) must follow its placeholder (whitespace allowed).
    size_t probe = cursor;
    while (probe < prompt_template.size() && prompt_template[probe] == ' ') ++probe;
    std::string ident = msg("(IMAGE", k, ")");
    if (prompt_template.compare(probe, ident.size(), ident) != 0) {
      throw PromptError(msg("placeholder ", k, " is not followed by its identifier ",
                            ident));
    }
  }
  for (int64_t id : tok.encode(prompt_template.substr(cursor))) seq.append_text(id);
  seq.validate();
  return seq;
}

Tensor assemble_input(const TokenSequence& seq, const Tensor& embedding_table,
                      const Tensor& image_tokens) {
  seq.validate();
  if (seq.n_images > 0) {
    if (image_tokens.rank() != 3 || image_tokens.dim(0) < seq.n_images) {
      throw AssemblyError(msg("image tokens ", shape_str(image_tokens.shape()),
                              " cannot fill ", seq.n_images, " images"));
    }
    if (image_tokens.dim(1) != seq.slots_per_image) {
      throw AssemblyError(msg("image tokens provide ", image_tokens.dim(1),
                              " slots, sequence expects ", seq.slots_per_image));
    }
    if (image_tokens.dim(2) != embedding_table.dim(1)) {
      throw AssemblyError(msg("image token width ", image_tokens.dim(2),
                              " vs embedding width ", embedding_table.dim(1)));
    }
  }

  std::vector<int64_t> text_ids = seq.text_token_ids();
  for (int64_t id : text_ids) {
    if (id < 0 || id >= embedding_table.dim(0)) {
      throw AssemblyError(msg("token id ", id, " outside vocabulary ",
                              embedding_table.dim(0)));
    }
  }
  Tensor text_rows = gather_rows(embedding_table, text_ids);

  std::vector<Tensor> sources{text_rows};
  for (int64_t j = 0; j < seq.n_images; ++j) sources.push_back(index0(image_tokens, j));

  std::vector<std::pair<int, int64_t>> picks;
  picks.reserve(seq.items.size());
  int64_t text_cursor = 0;
  for (const SeqItem& it : seq.items) {
    if (it.kind == SeqItem::Kind::Text) {
      picks.emplace_back(0, text_cursor++);
    } else {
      picks.emplace_back(static_cast<int>(it.image_index), it.slot);
    }
  }
  return compose_rows(sources, picks);
}

std::vector<int64_t> TokenSequence::text_token_ids() const {
  std::vector<int64_t> ids;
  ids.reserve(items.size());
  for (const SeqItem& it : items) {
    if (it.kind == SeqItem::Kind::Text) ids.push_back(it.token_id);
  }
  return ids;
}

}  // namespace calico
