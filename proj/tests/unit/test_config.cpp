#include <doctest.h>

#include "calico/config.hpp"

using namespace calico;

TEST_CASE("defaults carry the published token and depth counts") {
  ModelConfig c;
  CHECK(c.S_I == 32);
  CHECK(c.N == 32);
  c.validate();
}

TEST_CASE("key=value parsing mirrors field names") {
  KeyValues kv = KeyValues::from_string(
      "# comment\n"
      "H=8\nW=8\nS_C=16\nD_C=8\nS_S=12\nD_S=8\nS_I=4\nD_I=8\nD=16\nN=4\n"
      "S_D=16\nD_D=8\nvocab=300\nheads=2\ncem.enabled=false\ncam.k=1\n");
  ModelConfig c = ModelConfig::from_kv(kv);
  CHECK(c.H == 8);
  CHECK(c.S_C == 16);
  CHECK(c.cem_enabled == false);
  CHECK(c.cam_k == 1);
  CHECK(kv.unconsumed().empty());
}

TEST_CASE("round trip through text") {
  ModelConfig c;
  c.H = 8;
  c.W = 8;
  c.S_C = 12;
  c.D_C = 8;
  c.S_S = 12;
  c.D_S = 8;
  c.S_I = 8;
  c.D_I = 8;
  c.D = 16;
  c.N = 4;
  c.S_D = 16;
  c.D_D = 8;
  c.vocab = 300;
  c.heads = 2;
  c.cam_layers_override = {1, 3};
  ModelConfig back = ModelConfig::from_kv(KeyValues::from_string(c.to_text()));
  CHECK(back.S_C == c.S_C);
  CHECK(back.cam_layers_override == c.cam_layers_override);
}

TEST_CASE("validation rejects bad geometry") {
  ModelConfig c;
  c.S_I = c.S_C + 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  ModelConfig d;
  d.N = 1;
  CHECK_THROWS_AS(d.validate(), ConfigError);
  ModelConfig e;
  e.S_C = 7;  // does not divide 3*16*16
  CHECK_THROWS_AS(e.validate(), ConfigError);
  ModelConfig f;
  f.cam_k = 40;  // >= N
  CHECK_THROWS_AS(f.validate(), ConfigError);
}

TEST_CASE("malformed lines and values raise parse errors") {
  CHECK_THROWS_AS(KeyValues::from_string("novalue\n"), ParseError);
  KeyValues kv = KeyValues::from_string("H=abc\n");
  CHECK_THROWS_AS(kv.get_i64("H", 1), ParseError);
  KeyValues kb = KeyValues::from_string("flag=maybe\n");
  CHECK_THROWS_AS(kb.get_bool("flag", true), ParseError);
}

TEST_CASE("unconsumed keys are reported") {
  KeyValues kv = KeyValues::from_string("H=8\ntypo_key=3\n");
  kv.get_i64("H", 0);
  auto leftover = kv.unconsumed();
  REQUIRE(leftover.size() == 1);
  CHECK(leftover[0] == "typo_key");
}

TEST_CASE("train config picks defaults from the published schedule") {
  TrainConfig t = TrainConfig::from_kv(KeyValues::from_string(""));
  CHECK(t.base_lr == 4e-4);
  CHECK(t.warmup_steps == 100);
  CHECK(t.beta1 == 0.9);
  CHECK(t.beta2 == 0.95);
  CHECK(t.grad_clip == 1.0);
  CHECK(t.lambda_text == 1.0);
  CHECK(t.lambda_focal == 2.0);
  CHECK(t.lambda_dice == 0.5);
}
