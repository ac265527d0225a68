#include "calico/parser.hpp"

#include <cctype>

namespace calico {

namespace {

bool is_whitespace_byte(int64_t id) {
  return id == ' ' || id == '\t' || id == '\n' || id == '\r';
}

}  // namespace

ParseResult parse_grounded_output(const std::vector<int64_t>& tokens,
                                  const Tokenizer& tok, int64_t n_images) {
  ParseResult result;
  enum class State { Outside, InPhrase, AwaitSeg, AwaitRef };
  State state = State::Outside;
  std::vector<int64_t> phrase;
  int64_t seg_pos = -1;

  auto warn = [&](ParseWarning::Kind kind, int64_t pos) {
    result.warnings.push_back(ParseWarning{kind, pos});
  };

  int64_t i = 0;
  const int64_t n = static_cast<int64_t>(tokens.size());
  while (i < n) {
    int64_t id = tokens[i];
    switch (state) {
      case State::Outside:
        if (id == Tokenizer::kPOpen) {
          phrase.clear();
          state = State::InPhrase;
        } else if (id == Tokenizer::kSeg) {
          warn(ParseWarning::Kind::OrphanSeg, i);
        }
        ++i;
        break;
      case State::InPhrase:
        if (id == Tokenizer::kPClose) {
          if (phrase.empty()) {
            warn(ParseWarning::Kind::EmptyPhrase, i);
            state = State::Outside;
          } else {
            state = State::AwaitSeg;
          }
          ++i;
        } else if (id == Tokenizer::kPOpen) {
          warn(ParseWarning::Kind::RestartedPhrase, i);
          phrase.clear();
          ++i;
        } else if (id == Tokenizer::kSeg) {
          warn(ParseWarning::Kind::UnclosedPhrase, i);
          warn(ParseWarning::Kind::OrphanSeg, i);
          phrase.clear();
          state = State::Outside;
          ++i;
        } else {
          phrase.push_back(id);
          ++i;
        }
        break;
      case State::AwaitSeg:
        if (is_whitespace_byte(id)) {
          ++i;
        } else if (id == Tokenizer::kSeg) {
          seg_pos = i;
          state = State::AwaitRef;
          ++i;
        } else {
          warn(ParseWarning::Kind::MissingSeg, i);
          state = State::Outside;  // reprocess this token as plain text
        }
        break;
      case State::AwaitRef:
        if (is_whitespace_byte(id)) {
          ++i;
        } else if (tok.is_image_ref(id)) {
          int64_t k = tok.image_ref_index(id);
          if (k > n_images) {
            warn(ParseWarning::Kind::ImageIndexOutOfRange, i);
          } else {
            result.spans.push_back(SpanSkeleton{phrase, k, seg_pos});
          }
          phrase.clear();
          state = State::Outside;
          ++i;
        } else {
          warn(ParseWarning::Kind::MissingImageRef, i);
          phrase.clear();
          state = State::Outside;  // reprocess
        }
        break;
    }
  }
  if (state == State::InPhrase) {
    warn(ParseWarning::Kind::UnclosedPhrase, n);
  } else if (state == State::AwaitSeg) {
    warn(ParseWarning::Kind::MissingSeg, n);
  } else if (state == State::AwaitRef) {
    warn(ParseWarning::Kind::MissingImageRef, n);
  }
  return result;
}

std::vector<int64_t> serialize_spans(const std::vector<SpanSkeleton>& spans,
                                     const Tokenizer& tok) {
  std::vector<int64_t> out;
  for (size_t s = 0; s < spans.size(); ++s) {
    if (s) out.push_back(' ');
    out.push_back(Tokenizer::kPOpen);
    out.insert(out.end(), spans[s].phrase_ids.begin(), spans[s].phrase_ids.end());
    out.push_back(Tokenizer::kPClose);
    out.push_back(' ');
    out.push_back(Tokenizer::kSeg);
    out.push_back(' ');
    out.push_back(tok.image_ref_id(spans[s].image_index));
  }
  return out;
}

std::string normalize_label(const std::string& raw) {
  std::string out;
  bool pending_space = false;
  for (char c : raw) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out += ' ';
      pending_space = false;
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

const char* parse_warning_name(ParseWarning::Kind kind) {
  switch (kind) {
    case ParseWarning::Kind::OrphanSeg: return "orphan-seg";
    case ParseWarning::Kind::UnclosedPhrase: return "unclosed-phrase";
    case ParseWarning::Kind::RestartedPhrase: return "restarted-phrase";
    case ParseWarning::Kind::EmptyPhrase: return "empty-phrase";
    case ParseWarning::Kind::MissingSeg: return "missing-seg";
    case ParseWarning::Kind::MissingImageRef: return "missing-image-ref";
    case ParseWarning::Kind::ImageIndexOutOfRange: return "image-index-out-of-range";
  }
  return "unknown";
}

}  // namespace calico
