#include <doctest.h>

#include "calico/tokenizer.hpp"

using namespace calico;

TEST_CASE("byte round trip is identity on vocabulary text") {
  Tokenizer tok(4);
  std::string text = "The unique parts of the objects are <p> the seat cushion </p> "
                     "[SEG] (IMAGE1) and <p> the back pillow </p> [SEG] (IMAGE2).";
  auto ids = tok.encode(text);
  CHECK(tok.decode(ids) == text);
}

TEST_CASE("special strings map to dedicated ids") {
  Tokenizer tok(2);
  auto ids = tok.encode("<p>x</p>[SEG](IMAGE2)");
  REQUIRE(ids.size() == 5);
  CHECK(ids[0] == Tokenizer::kPOpen);
  CHECK(ids[1] == static_cast<int64_t>('x'));
  CHECK(ids[2] == Tokenizer::kPClose);
  CHECK(ids[3] == Tokenizer::kSeg);
  CHECK(ids[4] == tok.image_ref_id(2));
  auto with_image = tok.encode("<image>");
  CHECK(with_image == std::vector<int64_t>{Tokenizer::kImage});
}

TEST_CASE("plain-text encoding never merges into specials") {
  Tokenizer tok(4);
  auto ids = tok.encode_text("<p>x</p>[SEG](IMAGE1)");
  for (int64_t id : ids) CHECK(id < 256);
}

TEST_CASE("image identifiers as ordinary text when configured") {
  Tokenizer tok(4, /*image_refs_as_text=*/true);
  auto ids = tok.encode("(IMAGE1)");
  CHECK(ids.size() == 8);  // all bytes
  for (int64_t id : ids) CHECK(id < 256);
  CHECK(tok.decode(ids) == "(IMAGE1)");
}

TEST_CASE("identifier range checks") {
  Tokenizer tok(3);
  CHECK(tok.image_ref_id(1) == Tokenizer::kFirstImageRef);
  CHECK(tok.image_ref_id(3) == Tokenizer::kFirstImageRef + 2);
  CHECK_THROWS_AS(tok.image_ref_id(4), PromptError);
  CHECK(tok.image_ref_index(Tokenizer::kFirstImageRef + 1) == 2);
  CHECK_FALSE(tok.is_image_ref(Tokenizer::kSeg));
  CHECK(tok.vocab_floor() == Tokenizer::kFirstImageRef + 3);
}

TEST_CASE("ids beyond the reserved range decode to nothing") {
  Tokenizer tok(2);
  CHECK(tok.decode({tok.vocab_floor() + 5}) == "");
}
