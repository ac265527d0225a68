#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "calico/params.hpp"

using namespace calico;

namespace {

std::string temp_path(const char* name) {
  return std::string("/tmp/calico_test_") + name;
}

}  // namespace

TEST_CASE("checkpoint round trip preserves names, shapes and payloads") {
  Rng rng(1);
  ParamSet a;
  a.add("alpha.w", normal_init(rng, {3, 4}, 1.0));
  a.add("beta.b", normal_init(rng, {7}, 1.0), /*trainable=*/false);
  std::string path = temp_path("roundtrip.cali");
  a.save(path);

  ParamSet b;
  b.add("alpha.w", Tensor::zeros({3, 4}));
  b.add("beta.b", Tensor::zeros({7}));
  b.load(path);
  for (size_t i = 0; i < a.items().size(); ++i) {
    const auto& ta = a.items()[i].tensor;
    const auto& tb = b.items()[i].tensor;
    REQUIRE(ta.shape() == tb.shape());
    for (int64_t j = 0; j < ta.numel(); ++j) CHECK(ta.data()[j] == tb.data()[j]);
  }
  std::remove(path.c_str());
}

TEST_CASE("header starts with the magic and version") {
  ParamSet a;
  a.add("w", Tensor::zeros({2}));
  std::string path = temp_path("magic.cali");
  a.save(path);
  std::ifstream is(path, std::ios::binary);
  char head[8];
  is.read(head, 8);
  CHECK(head[0] == 'C');
  CHECK(head[1] == 'A');
  CHECK(head[2] == 'L');
  CHECK(head[3] == 'I');
  CHECK(head[4] == 1);  // version u32 little-endian
  CHECK(head[5] == 0);
  std::remove(path.c_str());
}

TEST_CASE("shape mismatch and bad magic are checkpoint errors") {
  ParamSet a;
  a.add("w", Tensor::zeros({2, 2}));
  std::string path = temp_path("mismatch.cali");
  a.save(path);
  ParamSet b;
  b.add("w", Tensor::zeros({4}));
  CHECK_THROWS_AS(b.load(path), CheckpointError);

  std::ofstream os(path, std::ios::binary);
  os << "JUNKJUNKJUNK";
  os.close();
  CHECK_THROWS_AS(b.load(path), CheckpointError);
  std::remove(path.c_str());
}

TEST_CASE("duplicate parameter names are rejected") {
  ParamSet a;
  a.add("w", Tensor::zeros({1}));
  CHECK_THROWS_AS(a.add("w", Tensor::zeros({1})), ConfigError);
}

TEST_CASE("shallow clone shares data but not gradients") {
  Rng rng(2);
  ParamSet a;
  a.add("w", normal_init(rng, {3}, 1.0));
  ParamSet b = a.shallow_clone();
  b.at("w").mutable_data()[0] = 42.0;
  CHECK(a.at("w").data()[0] == 42.0);  // data shared
  b.at("w").node().grad_buf()[0] = 7.0;
  CHECK_FALSE(a.at("w").has_grad());  // grads independent
}
