#pragma once

#include <string>
#include <vector>

#include "calico/tokenizer.hpp"

namespace calico {

// Parsed skeleton of "<p> PHRASE </p> [SEG] (IMAGEk)": phrase token ids, the
// 1-based image index and the sequence position of the [SEG] token (where the
// grounding state is harvested).
struct SpanSkeleton {
  std::vector<int64_t> phrase_ids;
  int64_t image_index = 0;
  int64_t seg_pos = -1;
};

struct ParseWarning {
  enum class Kind {
    OrphanSeg,             // [SEG] without a preceding </p>
    UnclosedPhrase,        // <p> still open at end of stream
    RestartedPhrase,       // <p> inside an open phrase
    EmptyPhrase,           // <p></p>
    MissingSeg,            // </p> not followed by [SEG]
    MissingImageRef,       // [SEG] not followed by an identifier
    ImageIndexOutOfRange,  // identifier beyond the sample's image count
  };
  Kind kind;
  int64_t position;  // token index that triggered the warning
};

struct ParseResult {
  std::vector<SpanSkeleton> spans;  // emission order
  std::vector<ParseWarning> warnings;
};

// Single-pass recognizer; never throws on arbitrary token streams.
// Non-conforming regions are skipped as plain text and reported as warnings.
ParseResult parse_grounded_output(const std::vector<int64_t>& tokens,
                                  const Tokenizer& tok, int64_t n_images);

// Tag-syntax serialization of parsed spans; reparsing yields the same spans.
std::vector<int64_t> serialize_spans(const std::vector<SpanSkeleton>& spans,
                                     const Tokenizer& tok);

// Lowercased, whitespace-collapsed phrase text (label normalization).
std::string normalize_label(const std::string& raw);

const char* parse_warning_name(ParseWarning::Kind kind);

}  // namespace calico
