#include <doctest.h>

#include <cmath>

#include "calico/ops.hpp"
#include "calico/params.hpp"

using namespace calico;

namespace {

Tensor random_tensor(Rng& rng, Shape shape, bool requires_grad = false) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (double& v : t.mutable_data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

// Reference triple-loop product, independent of the op implementation.
std::vector<double> matmul_oracle(const std::vector<double>& a,
                                  const std::vector<double>& b, int64_t m,
                                  int64_t k, int64_t n) {
  std::vector<double> c(m * n, 0.0);
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j)
      for (int64_t kk = 0; kk < k; ++kk) c[i * n + j] += a[i * k + kk] * b[kk * n + j];
  return c;
}

}  // namespace

TEST_CASE("matmul identity") {
  Tensor eye = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Rng rng(7);
  Tensor m = random_tensor(rng, {3, 3});
  Tensor out = matmul(eye, m);
  for (size_t i = 0; i < m.data().size(); ++i)
    CHECK(out.data()[i] == doctest::Approx(m.data()[i]).epsilon(1e-15));
}

TEST_CASE("matmul matches triple-loop reference") {
  Rng rng(11);
  Tensor a = random_tensor(rng, {4, 5});
  Tensor b = random_tensor(rng, {5, 6});
  Tensor c = matmul(a, b);
  auto ref = matmul_oracle(a.data(), b.data(), 4, 5, 6);
  for (size_t i = 0; i < ref.size(); ++i) CHECK(std::fabs(c.data()[i] - ref[i]) < 1e-12);
}

TEST_CASE("matmul shape mismatch raises with both shapes") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({2, 3});
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("(2x3)"), DimensionError);
}

TEST_CASE("matmul batch broadcasting") {
  Rng rng(3);
  Tensor a = random_tensor(rng, {2, 3, 4});
  Tensor b = random_tensor(rng, {4, 5});
  Tensor c = matmul(a, b);
  REQUIRE(c.shape() == Shape{2, 3, 5});
  for (int64_t batch = 0; batch < 2; ++batch) {
    std::vector<double> ab(a.data().begin() + batch * 12,
                           a.data().begin() + (batch + 1) * 12);
    auto ref = matmul_oracle(ab, b.data(), 3, 4, 5);
    for (size_t i = 0; i < ref.size(); ++i)
      CHECK(std::fabs(c.data()[batch * 15 + i] - ref[i]) < 1e-12);
  }
}

TEST_CASE("matmul associativity on random triples") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor a = random_tensor(rng, {3, 4});
    Tensor b = random_tensor(rng, {4, 5});
    Tensor c = random_tensor(rng, {5, 2});
    Tensor left = matmul(matmul(a, b), c);
    Tensor right = matmul(a, matmul(b, c));
    for (size_t i = 0; i < left.data().size(); ++i) {
      double denom = std::max(std::fabs(left.data()[i]), 1.0);
      CHECK(std::fabs(left.data()[i] - right.data()[i]) / denom < 1e-9);
    }
  }
}

TEST_CASE("softmax of zeros is uniform") {
  Tensor x = Tensor::zeros({3});
  Tensor y = softmax(x, 0);
  for (double v : y.data()) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("softmax is stabilized against overflow") {
  Tensor x = Tensor::from({2}, {1000.0, 0.0});
  Tensor y = softmax(x, 0);
  CHECK(y.data()[0] == doctest::Approx(1.0));
  CHECK(y.data()[1] < 1e-300);
}

TEST_CASE("softmax matches exp/sum reference") {
  Rng rng(17);
  Tensor x = random_tensor(rng, {8});
  Tensor y = softmax(x, 0);
  double z = 0;
  for (double v : x.data()) z += std::exp(v);
  for (size_t i = 0; i < 8; ++i)
    CHECK(std::fabs(y.data()[i] - std::exp(x.data()[i]) / z) < 1e-12);
}

TEST_CASE("softmax shift invariance") {
  Rng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor x = random_tensor(rng, {6});
    Tensor shifted = add_const(x, 17.5);
    Tensor a = softmax(x, 0);
    Tensor b = softmax(shifted, 0);
    for (size_t i = 0; i < 6; ++i) CHECK(std::fabs(a.data()[i] - b.data()[i]) < 1e-12);
  }
}

TEST_CASE("softmax rows sum to one along the chosen axis") {
  Rng rng(29);
  Tensor x = random_tensor(rng, {4, 5});
  Tensor y = softmax(x, 1);
  for (int64_t r = 0; r < 4; ++r) {
    double s = 0;
    for (int64_t c = 0; c < 5; ++c) s += y.at({r, c});
    CHECK(std::fabs(s - 1.0) < 1e-9);
    for (int64_t c = 0; c < 5; ++c) CHECK(y.at({r, c}) >= 0.0);
  }
}

TEST_CASE("layer_norm constant row is zero pre-affine") {
  Tensor x = Tensor::full({1, 4}, 3.25);
  Tensor gain = Tensor::full({4}, 1.0);
  Tensor bias = Tensor::zeros({4});
  Tensor y = layer_norm(x, gain, bias);
  for (double v : y.data()) CHECK(std::fabs(v) < 1e-9);
}

TEST_CASE("layer_norm hand case [1,3] -> [-1,1]") {
  Tensor x = Tensor::from({1, 2}, {1.0, 3.0});
  Tensor gain = Tensor::full({2}, 1.0);
  Tensor bias = Tensor::zeros({2});
  Tensor y = layer_norm(x, gain, bias, 1e-9);
  CHECK(y.data()[0] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(y.data()[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("layer_norm rows are centered") {
  Rng rng(31);
  Tensor x = random_tensor(rng, {4, 8});
  Tensor gain = Tensor::full({8}, 1.0);
  Tensor bias = Tensor::zeros({8});
  Tensor y = layer_norm(x, gain, bias);
  for (int64_t r = 0; r < 4; ++r) {
    double mu = 0;
    for (int64_t c = 0; c < 8; ++c) mu += y.at({r, c});
    CHECK(std::fabs(mu / 8) < 1e-9);
  }
}

TEST_CASE("layer_norm extent mismatch") {
  Tensor x = Tensor::zeros({2, 4});
  CHECK_THROWS_AS(layer_norm(x, Tensor::zeros({3}), Tensor::zeros({4})), DimensionError);
}

TEST_CASE("non-finite op output is a hard error") {
  Tensor x = Tensor::from({2}, {-1.0, 2.0});
  CHECK_THROWS_AS(log(x), NumericError);
  CHECK_THROWS_AS(Tensor::from({1}, {std::nan("")}), NumericError);
}

TEST_CASE("backward through elementwise square") {
  Tensor x = Tensor::from({2}, {2.0, 3.0}, true);
  Tensor y = sum(mul(x, x));  // d/dx = 2x
  y.backward();
  CHECK(x.grad()[0] == doctest::Approx(4.0));
  CHECK(x.grad()[1] == doctest::Approx(6.0));
}

TEST_CASE("slice, concat and compose roundtrip") {
  Rng rng(41);
  Tensor x = random_tensor(rng, {5, 3}, true);
  Tensor top = slice_rows(x, 0, 2);
  Tensor bottom = slice_rows(x, 2, 3);
  Tensor back = concat0({top, bottom});
  for (size_t i = 0; i < x.data().size(); ++i) CHECK(back.data()[i] == x.data()[i]);

  std::vector<std::pair<int, int64_t>> picks{{0, 4}, {0, 0}};
  Tensor picked = compose_rows({x}, picks);
  CHECK(picked.at({0, 1}) == x.at({4, 1}));
  CHECK(picked.at({1, 2}) == x.at({0, 2}));
}

TEST_CASE("add_rows touches only the targeted rows") {
  Tensor x = Tensor::zeros({4, 2});
  Tensor d = Tensor::full({2, 2}, 1.5);
  Tensor y = add_rows(x, d, 1);
  CHECK(y.at({0, 0}) == 0.0);
  CHECK(y.at({1, 0}) == 1.5);
  CHECK(y.at({2, 1}) == 1.5);
  CHECK(y.at({3, 1}) == 0.0);
}

TEST_CASE("split/merge heads invert each other") {
  Rng rng(43);
  Tensor x = random_tensor(rng, {3, 8});
  Tensor back = merge_heads(split_heads(x, 4));
  for (size_t i = 0; i < x.data().size(); ++i) CHECK(back.data()[i] == x.data()[i]);
}

TEST_CASE("shape and axis violations") {
  CHECK_THROWS_AS(Tensor::zeros({0, 2}), DimensionError);
  CHECK_THROWS_AS(softmax(Tensor::zeros({3}), 2), DimensionError);
}
