#pragma once

#include <vector>

#include "calico/params.hpp"
#include "calico/parser.hpp"

// Reference recursive-descent recognizer for the grounded-output grammar,
// kept independent of the production state machine. Only spans are compared;
// diagnostics are implementation detail.
namespace calico_test {

inline bool oracle_is_ws(int64_t id) {
  return id == ' ' || id == '\t' || id == '\n' || id == '\r';
}

class RecursiveDescentOracle {
 public:
  RecursiveDescentOracle(const std::vector<int64_t>& tokens,
                         const calico::Tokenizer& tok, int64_t n_images)
      : t_(tokens), tok_(tok), n_images_(n_images) {}

  std::vector<calico::SpanSkeleton> run() {
    while (pos_ < t_.size()) {
      if (t_[pos_] == calico::Tokenizer::kPOpen) {
        parse_span();
      } else {
        ++pos_;
      }
    }
    return spans_;
  }

 private:
  void parse_span() {
    ++pos_;  // consume <p>
    std::vector<int64_t> phrase;
    while (pos_ < t_.size()) {
      int64_t id = t_[pos_];
      if (id == calico::Tokenizer::kPClose) break;
      if (id == calico::Tokenizer::kPOpen) {  // restart
        ++pos_;
        phrase.clear();
        continue;
      }
      if (id == calico::Tokenizer::kSeg) {  // abandoned phrase, orphan seg
        ++pos_;
        return;
      }
      phrase.push_back(id);
      ++pos_;
    }
    if (pos_ >= t_.size()) return;  // unclosed at EOS
    ++pos_;                         // consume </p>
    if (phrase.empty()) return;
    while (pos_ < t_.size() && oracle_is_ws(t_[pos_])) ++pos_;
    if (pos_ >= t_.size() || t_[pos_] != calico::Tokenizer::kSeg) return;
    int64_t seg_pos = static_cast<int64_t>(pos_);
    ++pos_;
    while (pos_ < t_.size() && oracle_is_ws(t_[pos_])) ++pos_;
    if (pos_ >= t_.size() || !tok_.is_image_ref(t_[pos_])) return;
    int64_t k = tok_.image_ref_index(t_[pos_]);
    ++pos_;
    if (k <= n_images_) {
      spans_.push_back(calico::SpanSkeleton{phrase, k, seg_pos});
    }
  }

  const std::vector<int64_t>& t_;
  const calico::Tokenizer& tok_;
  int64_t n_images_;
  size_t pos_ = 0;
  std::vector<calico::SpanSkeleton> spans_;
};

inline bool spans_equal(const std::vector<calico::SpanSkeleton>& a,
                        const std::vector<calico::SpanSkeleton>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].phrase_ids != b[i].phrase_ids || a[i].image_index != b[i].image_index ||
        a[i].seg_pos != b[i].seg_pos) {
      return false;
    }
  }
  return true;
}

// Biased token-soup generator for fuzzing the grammar.
inline std::vector<int64_t> fuzz_stream(calico::Rng& rng, int64_t max_len,
                                        int64_t n_image_ids) {
  int64_t len = rng.uniform_int(0, max_len);
  std::vector<int64_t> out;
  out.reserve(len);
  for (int64_t i = 0; i < len; ++i) {
    int64_t roll = rng.uniform_int(0, 9);
    if (roll < 4) {
      static const int64_t specials[] = {
          calico::Tokenizer::kPOpen, calico::Tokenizer::kPClose,
          calico::Tokenizer::kSeg,   calico::Tokenizer::kImage,
          calico::Tokenizer::kBos,   calico::Tokenizer::kEos,
      };
      out.push_back(specials[rng.uniform_int(0, 5)]);
    } else if (roll < 6) {
      out.push_back(calico::Tokenizer::kFirstImageRef +
                    rng.uniform_int(0, n_image_ids + 1));  // sometimes invalid
    } else if (roll < 8) {
      out.push_back(rng.uniform_int(0, 255));
    } else if (roll < 9) {
      out.push_back(' ');
    } else {
      out.push_back(rng.uniform_int(256, 400));  // ids with no surface form
    }
  }
  return out;
}

}  // namespace calico_test
