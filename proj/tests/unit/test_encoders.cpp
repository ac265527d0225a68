#include <doctest.h>

#include <cmath>

#include "calico/encoders.hpp"
#include "calico/ops.hpp"

using namespace calico;

namespace {

ImageBatch batch_of(std::vector<Tensor> imgs) {
  ImageBatch b;
  b.images = std::move(imgs);
  return b;
}

Tensor random_image(Rng& rng, int64_t h, int64_t w) {
  Tensor t = Tensor::zeros({3, h, w});
  for (double& v : t.mutable_data()) v = rng.uniform();
  return t;
}

}  // namespace

TEST_CASE("encoder output shape contract") {
  Rng rng(1);
  ParamSet params;
  ToyEncoder enc(params, "enc", 4, 4, 12, 8, 2, rng);
  ImageBatch b = batch_of({random_image(rng, 4, 4), random_image(rng, 4, 4)});
  Tensor out = enc.encode(b);
  CHECK(out.shape() == Shape{2, 12, 8});
}

TEST_CASE("duplicate images embed identically (per-image independence)") {
  Rng rng(2);
  ParamSet params;
  ToyEncoder enc(params, "enc", 4, 4, 6, 8, 2, rng);
  Tensor img = random_image(rng, 4, 4);
  Tensor other = random_image(rng, 4, 4);
  Tensor out = enc.encode(batch_of({img, img, other}));
  for (int64_t s = 0; s < 6; ++s)
    for (int64_t c = 0; c < 8; ++c)
      CHECK(out.at({0, s, c}) == out.at({1, s, c}));
  // And the single-image encoding matches its batched row: no cross-talk.
  Tensor solo = enc.encode_one(img);
  for (int64_t s = 0; s < 6; ++s)
    for (int64_t c = 0; c < 8; ++c)
      CHECK(out.at({0, s, c}) == solo.at({s, c}));
}

TEST_CASE("encoder is deterministic across calls") {
  Rng rng(3);
  ParamSet params;
  ToyEncoder enc(params, "enc", 4, 4, 6, 8, 2, rng);
  Tensor zero_img = Tensor::zeros({3, 4, 4});
  Tensor a = enc.encode_one(zero_img);
  Tensor b = enc.encode_one(zero_img);
  for (size_t i = 0; i < a.data().size(); ++i) CHECK(a.data()[i] == b.data()[i]);
}

TEST_CASE("wrong image extents raise dimension errors") {
  Rng rng(4);
  ParamSet params;
  ToyEncoder enc(params, "enc", 4, 4, 6, 8, 2, rng);
  CHECK_THROWS_AS(enc.encode_one(Tensor::zeros({3, 8, 8})), DimensionError);
}

TEST_CASE("sequence length must divide the pixel count") {
  Rng rng(5);
  ParamSet params;
  CHECK_THROWS_AS(ToyEncoder(params, "enc", 4, 4, 7, 8, 2, rng), ConfigError);
}

TEST_CASE("frozen encoder registers non-trainable parameters") {
  Rng rng(6);
  ParamSet params;
  ToyEncoder enc(params, "frozen", 4, 4, 6, 8, 2, rng, /*trainable=*/false);
  int64_t n = 0;
  for (const Parameter& p : params.items()) {
    CHECK_FALSE(p.trainable);
    ++n;
  }
  CHECK(n > 0);
}

TEST_CASE("golden fixture: zero image embedding is stable across runs") {
  // Frozen reference recorded from the first verified run; guards against
  // drift in encoder wiring or initialization streams.
  Rng rng(12345);
  ParamSet params;
  ToyEncoder enc(params, "enc", 4, 4, 4, 4, 2, rng);
  Tensor out = enc.encode_one(Tensor::zeros({3, 4, 4}));
  const double golden[16] = {
      1.1646725196973695,   -0.61889171137491339, 3.1735022671731814,
      -2.3137445771046021,  1.9750447105005757,   -0.70124628305230585,
      2.79455019757116,     -2.6516848744427861,  1.9694418239909073,
      -0.75239917200005968, 2.8397247520991065,   -2.5889911684557618,
      1.2088477076308686,   -0.58203111245264172, 3.1853898963012002,
      -2.2970642232166774};
  REQUIRE(out.data().size() == 16);
  for (size_t i = 0; i < 16; ++i)
    CHECK(out.data()[i] == doctest::Approx(golden[i]).epsilon(1e-14));
  // A rebuilt view over the same parameters reproduces it bit-for-bit.
  Tensor again = ToyEncoder::view(params, "enc", 4, 4, 4, 4, 2).encode_one(
      Tensor::zeros({3, 4, 4}));
  for (size_t i = 0; i < out.data().size(); ++i) CHECK(out.data()[i] == again.data()[i]);
}
