#include <doctest.h>

#include "calico/ops.hpp"
#include "calico/params.hpp"
#include "calico/sequence.hpp"

using namespace calico;

namespace {

ImageBatch dummy_images(int64_t n, int64_t h = 4, int64_t w = 4) {
  ImageBatch batch;
  for (int64_t i = 0; i < n; ++i) batch.images.push_back(Tensor::full({3, h, w}, 0.5));
  return batch;
}

const char* kPaperPrompt =
    "The <image> (IMAGE1) and <image> (IMAGE2) provide an overview of the "
    "pictures. Can you segment the common object in these images?";

}  // namespace

TEST_CASE("sequence length identity S = S_T + N_I*S_I") {
  Tokenizer tok(8);
  // 19 text tokens + BOS = 20 text items, two images at 32 slots each.
  std::string prompt = "<image> (IMAGE1)x<image> (IMAGE2)";
  // count: encode pieces -> identifiers are single tokens
  TokenSequence seq = tokenize_prompt(prompt, dummy_images(2), tok, 32);
  CHECK(seq.length() == seq.text_count() + 2 * 32);
  CHECK(seq.slots_per_image == 32);

  TokenSequence paper_seq = tokenize_prompt(kPaperPrompt, dummy_images(2), tok, 32);
  CHECK(paper_seq.length() == paper_seq.text_count() + 2 * 32);
}

TEST_CASE("twenty text tokens with two 32-slot images give S = 84") {
  Tokenizer tok(8);
  // BOS + "<image> (IMAGE1)" -> identifier + space tokens; pad the text with
  // bytes until exactly 20 text items.
  std::string prompt = "<image> (IMAGE1)<image> (IMAGE2)abcdefghijklmnop";
  TokenSequence seq = tokenize_prompt(prompt, dummy_images(2), tok, 32);
  // text items: BOS + ' ' + (IMAGE1) + ' ' + (IMAGE2) + 16 bytes = 21; trim one.
  // Assert the identity rather than a fragile count, then check the spec case
  // by constructing exactly 20 text items.
  CHECK(seq.length() == seq.text_count() + 64);

  TokenSequence exact;
  exact.slots_per_image = 32;
  exact.n_images = 2;
  exact.append_text(Tokenizer::kBos);
  for (int64_t i = 0; i < 17; ++i) exact.append_text('a');
  for (int64_t s = 0; s < 32; ++s)
    exact.items.push_back(SeqItem{SeqItem::Kind::ImageSlot, -1, 1, s});
  exact.append_text(tok.image_ref_id(1));
  for (int64_t s = 0; s < 32; ++s)
    exact.items.push_back(SeqItem{SeqItem::Kind::ImageSlot, -1, 2, s});
  exact.append_text(tok.image_ref_id(2));
  exact.validate();
  CHECK(exact.text_count() == 20);
  CHECK(exact.length() == 84);
}

TEST_CASE("placeholder count mismatch is a prompt error") {
  Tokenizer tok(8);
  CHECK_THROWS_AS(tokenize_prompt("<image> (IMAGE1) only", dummy_images(2), tok, 4),
                  PromptError);
  CHECK_THROWS_AS(
      tokenize_prompt("<image> (IMAGE1) <image> (IMAGE2)", dummy_images(1), tok, 4),
      PromptError);
}

TEST_CASE("identifier must follow its placeholder") {
  Tokenizer tok(8);
  CHECK_THROWS_AS(
      tokenize_prompt("<image> (IMAGE2) <image> (IMAGE1)", dummy_images(2), tok, 4),
      PromptError);
  CHECK_THROWS_AS(tokenize_prompt("<image> <image> (IMAGE1)(IMAGE2)",
                                  dummy_images(2), tok, 4),
                  PromptError);
}

TEST_CASE("paper prompt slots appear in image order") {
  Tokenizer tok(8);
  TokenSequence seq = tokenize_prompt(kPaperPrompt, dummy_images(2), tok, 8);
  CHECK(seq.image_slot_start(1) < seq.image_slot_start(2));
  // Identifier text tokens come after their image block.
  int64_t id1_pos = -1, id2_pos = -1;
  for (int64_t i = 0; i < seq.length(); ++i) {
    if (seq.items[i].kind == SeqItem::Kind::Text &&
        seq.items[i].token_id == tok.image_ref_id(1)) {
      id1_pos = i;
    }
    if (seq.items[i].kind == SeqItem::Kind::Text &&
        seq.items[i].token_id == tok.image_ref_id(2)) {
      id2_pos = i;
    }
  }
  CHECK(seq.image_slot_start(1) + 8 <= id1_pos);
  CHECK(seq.image_slot_start(2) + 8 <= id2_pos);
  CHECK(id1_pos < seq.image_slot_start(2));
}

TEST_CASE("assemble_input without images is a pure embedding lookup") {
  Rng rng(3);
  Tensor table = normal_init(rng, {300, 6}, 1.0);
  TokenSequence seq;
  seq.slots_per_image = 0;
  seq.n_images = 0;
  seq.append_text(5);
  seq.append_text(17);
  Tensor t0 = assemble_input(seq, table, Tensor());
  REQUIRE(t0.shape() == Shape{2, 6});
  for (int64_t c = 0; c < 6; ++c) {
    CHECK(t0.at({0, c}) == table.at({5, c}));
    CHECK(t0.at({1, c}) == table.at({17, c}));
  }
}

TEST_CASE("assemble_input places image rows in slot order") {
  Rng rng(4);
  Tensor table = normal_init(rng, {300, 4}, 1.0);
  Tensor image_tokens = normal_init(rng, {2, 3, 4}, 1.0);
  TokenSequence seq;
  seq.slots_per_image = 3;
  seq.n_images = 2;
  seq.append_text(Tokenizer::kBos);
  // Image 2 first in the prompt: rows must permute accordingly.
  for (int64_t s = 0; s < 3; ++s)
    seq.items.push_back(SeqItem{SeqItem::Kind::ImageSlot, -1, 2, s});
  for (int64_t s = 0; s < 3; ++s)
    seq.items.push_back(SeqItem{SeqItem::Kind::ImageSlot, -1, 1, s});
  seq.append_text('x');
  Tensor t0 = assemble_input(seq, table, image_tokens);
  REQUIRE(t0.shape() == Shape{8, 4});
  for (int64_t s = 0; s < 3; ++s) {
    for (int64_t c = 0; c < 4; ++c) {
      CHECK(t0.at({1 + s, c}) == image_tokens.at({1, s, c}));
      CHECK(t0.at({4 + s, c}) == image_tokens.at({0, s, c}));
    }
  }
}

TEST_CASE("unfilled slots are assembly errors") {
  Rng rng(5);
  Tensor table = normal_init(rng, {300, 4}, 1.0);
  TokenSequence seq;
  seq.slots_per_image = 3;
  seq.n_images = 1;
  for (int64_t s = 0; s < 3; ++s)
    seq.items.push_back(SeqItem{SeqItem::Kind::ImageSlot, -1, 1, s});
  CHECK_THROWS_AS(assemble_input(seq, table, Tensor::zeros({1, 2, 4})), AssemblyError);
  // Broken contiguity is caught by validation.
  TokenSequence bad;
  bad.slots_per_image = 2;
  bad.n_images = 1;
  bad.items.push_back(SeqItem{SeqItem::Kind::ImageSlot, -1, 1, 0});
  bad.append_text('x');
  bad.items.push_back(SeqItem{SeqItem::Kind::ImageSlot, -1, 1, 1});
  CHECK_THROWS_AS(bad.validate(), AssemblyError);
}

TEST_CASE("image batch validation") {
  ImageBatch batch = dummy_images(2);
  CHECK_NOTHROW(batch.validate(4, 4, 8));
  CHECK_THROWS_AS(batch.validate(8, 8, 8), DimensionError);
  CHECK_THROWS_AS(batch.validate(4, 4, 1), DimensionError);
  ImageBatch bad;
  bad.images.push_back(Tensor::full({3, 4, 4}, 2.0));
  CHECK_THROWS_AS(bad.validate(4, 4, 8), InputError);
}
