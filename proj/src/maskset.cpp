#include "calico/maskset.hpp"

#include <json.hpp>

namespace calico {

using nlohmann::json;

int64_t BinaryMask::area() const {
  int64_t n = 0;
  for (uint8_t p : pixels) n += p;
  return n;
}

BinaryMask BinaryMask::zeros(int64_t h, int64_t w) {
  if (h <= 0 || w <= 0) throw DimensionError(msg("mask extents ", h, "x", w));
  BinaryMask m;
  m.height = h;
  m.width = w;
  m.pixels.assign(static_cast<size_t>(h * w), 0);
  return m;
}

BinaryMask BinaryMask::rect(int64_t h, int64_t w, int64_t r0, int64_t c0, int64_t r1,
                            int64_t c1) {
  BinaryMask m = zeros(h, w);
  for (int64_t r = std::max<int64_t>(0, r0); r < std::min(h, r1); ++r)
    for (int64_t c = std::max<int64_t>(0, c0); c < std::min(w, c1); ++c)
      m.pixels[r * w + c] = 1;
  return m;
}

std::vector<int64_t> rle_encode(const BinaryMask& mask) {
  std::vector<int64_t> runs;
  uint8_t current = 0;  // encoding starts with the 0-run
  int64_t run = 0;
  for (uint8_t p : mask.pixels) {
    if (p != 0 && p != 1) throw CodecError("mask pixel not binary");
    if (p == current) {
      ++run;
    } else {
      runs.push_back(run);
      current = p;
      run = 1;
    }
  }
  runs.push_back(run);
  if (runs.empty()) runs.push_back(0);
  return runs;
}

BinaryMask rle_decode(const std::vector<int64_t>& runs, int64_t height, int64_t width) {
  BinaryMask mask = BinaryMask::zeros(height, width);
  int64_t total = 0;
  uint8_t value = 0;
  for (int64_t run : runs) {
    if (run < 0) throw CodecError(msg("negative run length ", run));
    if (total + run > height * width) {
      throw CodecError(msg("run lengths total ", total + run, " exceeds ",
                           height * width, " pixels"));
    }
    for (int64_t i = 0; i < run; ++i) mask.pixels[total + i] = value;
    total += run;
    value = 1 - value;
  }
  if (total != height * width) {
    throw CodecError(msg("run lengths total ", total, " != ", height, "*", width));
  }
  return mask;
}

std::string maskset_to_json(const MaskSet& set) {
  json j;
  j["image_index"] = set.image_index;
  j["entries"] = json::array();
  for (const MaskEntry& e : set.entries) {
    j["entries"].push_back({{"label", e.label}, {"rle", rle_encode(e.mask)}});
  }
  return j.dump();
}

MaskSet maskset_from_json_text(const std::string& text, int64_t height, int64_t width) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(msg("maskset json: ", e.what()));
  }
  MaskSet set;
  set.image_index = j.at("image_index").get<int64_t>();
  for (const auto& e : j.at("entries")) {
    MaskEntry entry;
    entry.label = e.at("label").get<std::string>();
    if (entry.label.empty()) throw ParseError("maskset json: empty label");
    entry.mask = rle_decode(e.at("rle").get<std::vector<int64_t>>(), height, width);
    set.entries.push_back(std::move(entry));
  }
  return set;
}

BinaryMask binarize_logits(const Tensor& logits_hw) {
  if (logits_hw.rank() != 2) throw DimensionError("binarize: logits must be (H, W)");
  BinaryMask m = BinaryMask::zeros(logits_hw.dim(0), logits_hw.dim(1));
  const auto& v = logits_hw.data();
  for (size_t i = 0; i < v.size(); ++i) m.pixels[i] = v[i] > 0.0 ? 1 : 0;
  return m;
}

std::vector<MaskSet> bind_masks(const std::vector<SpanSkeleton>& spans,
                                const std::vector<BinaryMask>& masks,
                                const Tokenizer& tok, int64_t n_images) {
  if (spans.size() != masks.size()) {
    throw BindingError(msg("bind_masks: ", spans.size(), " spans vs ", masks.size(),
                           " masks"));
  }
  std::vector<MaskSet> sets(static_cast<size_t>(n_images));
  for (int64_t j = 0; j < n_images; ++j) sets[j].image_index = j + 1;
  for (size_t s = 0; s < spans.size(); ++s) {
    const SpanSkeleton& span = spans[s];
    if (span.image_index < 1 || span.image_index > n_images) {
      throw BindingError(msg("bind_masks: span image index ", span.image_index,
                             " outside 1..", n_images));
    }
    MaskEntry entry;
    entry.label = normalize_label(tok.decode(span.phrase_ids));
    entry.mask = masks[s];
    sets[span.image_index - 1].entries.push_back(std::move(entry));
  }
  return sets;
}

}  // namespace calico
