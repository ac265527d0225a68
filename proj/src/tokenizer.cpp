#include "calico/tokenizer.hpp"

namespace calico {

Tokenizer::Tokenizer(int64_t n_image_ids, bool image_refs_as_text)
    : n_image_ids_(n_image_ids), image_refs_as_text_(image_refs_as_text) {
  if (n_image_ids < 1) throw ConfigError("tokenizer: need at least one image identifier");
}

std::vector<int64_t> Tokenizer::encode_text(const std::string& text) const {
  std::vector<int64_t> ids;
  ids.reserve(text.size());
  for (unsigned char c : text) ids.push_back(static_cast<int64_t>(c));
  return ids;
}

std::string Tokenizer::special_string(int64_t id, int64_t image_ref_index) {
  switch (id) {
    case kPad: return "<pad>";
    case kBos: return "<s>";
    case kEos: return "</s>";
    case kImage: return "<image>";
    case kSeg: return "[SEG]";
    case kPOpen: return "<p>";
    case kPClose: return "</p>";
    default:
      if (image_ref_index > 0) return msg("(IMAGE", image_ref_index, ")");
      return "";
  }
}

std::vector<int64_t> Tokenizer::encode(const std::string& text) const {
  std::vector<int64_t> ids;
  size_t i = 0;
  auto match = [&](const std::string& token) {
    return text.compare(i, token.size(), token) == 0;
  };
  while (i < text.size()) {
    bool matched = false;
    static const std::pair<const char*, int64_t> fixed[] = {
        {"<image>", kImage}, {"</p>", kPClose}, {"<p>", kPOpen},
        {"[SEG]", kSeg},     {"<pad>", kPad},   {"</s>", kEos},
        {"<s>", kBos},
    };
    for (const auto& [tok, id] : fixed) {
      if (match(tok)) {
        ids.push_back(id);
        i += std::string(tok).size();
        matched = true;
        break;
      }
    }
    if (!matched && !image_refs_as_text_ && text[i] == '(') {
      for (int64_t k = 1; k <= n_image_ids_; ++k) {
        std::string ref = special_string(0, k);
        if (match(ref)) {
          ids.push_back(image_ref_id(k));
          i += ref.size();
          matched = true;
          break;
        }
      }
    }
    if (!matched) {
      ids.push_back(static_cast<unsigned char>(text[i]));
      ++i;
    }
  }
  return ids;
}

std::string Tokenizer::decode_one(int64_t id) const {
  if (id >= 0 && id < 256) return std::string(1, static_cast<char>(id));
  if (id >= kPad && id < kFirstImageRef) return special_string(id);
  if (is_image_ref(id)) return special_string(0, image_ref_index(id));
  return "";  // ids above the reserved range have no surface form
}

std::string Tokenizer::decode(const std::vector<int64_t>& ids) const {
  std::string out;
  for (int64_t id : ids) out += decode_one(id);
  return out;
}

int64_t Tokenizer::image_ref_id(int64_t k) const {
  if (k < 1 || k > n_image_ids_) {
    throw PromptError(msg("image identifier index ", k, " outside 1..", n_image_ids_));
  }
  return kFirstImageRef + k - 1;
}

bool Tokenizer::is_image_ref(int64_t id) const {
  return id >= kFirstImageRef && id < kFirstImageRef + n_image_ids_;
}

int64_t Tokenizer::image_ref_index(int64_t id) const {
  if (!is_image_ref(id)) throw PromptError(msg("token ", id, " is not an image identifier"));
  return id - kFirstImageRef + 1;
}

}  // namespace calico
