#include <cmath>
#include <vector>

#include "doctest.h"
#include "nlnde/errors.hpp"
#include "nlnde/tensor.hpp"
#include "test_util.hpp"

using namespace nlnde;

namespace {

Tensor random_vector(std::size_t n, Rng& rng, bool param = true) {
  std::vector<double> data(n);
  for (double& v : data) v = rng.normal(0.0, 0.6);
  return param ? Tensor::param({n}, std::move(data))
               : Tensor::constant({n}, std::move(data));
}

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  std::vector<double> data(r * c);
  for (double& v : data) v = rng.normal(0.0, 0.6);
  return Tensor::param({r, c}, std::move(data));
}

// A small randomized composition of the supported ops, structure fixed by
// the seed so the same graph can be rebuilt for finite differencing.
Tensor random_dag_loss(const Tensor& x, const Tensor& w, const Tensor& b,
                       std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Tensor> pool{x, tanh(x)};
  for (int i = 0; i < 4; ++i) {
    const Tensor a = pool[rng.index(pool.size())];
    const Tensor c = pool[rng.index(pool.size())];
    switch (rng.index(6)) {
      case 0: pool.push_back(tanh(a)); break;
      case 1: pool.push_back(sigmoid(a)); break;
      case 2: pool.push_back(add(a, c)); break;
      case 3: pool.push_back(mul(a, c)); break;
      case 4: pool.push_back(softmax(a)); break;
      default: pool.push_back(scale(a, 0.5)); break;
    }
  }
  const Tensor h = tanh(affine(pool.back(), w, b));
  const Tensor lse = logsumexp(concat({h, slice(pool[pool.size() - 2], 0, 2)}));
  return add(lse, dot(pool.back(), pool.back()));
}

}  // namespace

TEST_CASE("matmul with an identity matrix returns the input") {
  const Tensor eye = Tensor::constant(
      {3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const Tensor a = Tensor::constant({3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  CHECK(matmul(eye, a).value() == a.value());
}

TEST_CASE("shape mismatches raise a dimension error naming both shapes") {
  const Tensor a = Tensor::constant({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor b = Tensor::constant({2, 2}, {1, 2, 3, 4});
  CHECK_THROWS_AS(matmul(a, b), DimensionError);
  CHECK_THROWS_AS(add(Tensor::zeros({3}), Tensor::zeros({4})),
                  DimensionError);
  try {
    add(Tensor::zeros({3}), Tensor::zeros({4}));
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("3") != std::string::npos);
    CHECK(msg.find("4") != std::string::npos);
  }
}

TEST_CASE("softmax of equal entries is uniform") {
  const Tensor s = softmax(Tensor::constant({4}, {2.5, 2.5, 2.5, 2.5}));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(s.at(i) == doctest::Approx(0.25).epsilon(1e-12));
  }
}

TEST_CASE("logsumexp matches direct summation") {
  const double expected = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
  CHECK(logsumexp(Tensor::constant({3}, {1, 2, 3})).item() ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("logsumexp stays finite over extreme magnitudes") {
  const double big = logsumexp(Tensor::constant({2}, {1e6, -1e6})).item();
  CHECK(std::isfinite(big));
  CHECK(big == doctest::Approx(1e6));
  const double low = logsumexp(Tensor::constant({2}, {-1e6, -1e6})).item();
  CHECK(std::isfinite(low));
  CHECK(low == doctest::Approx(-1e6 + std::log(2.0)));
}

TEST_CASE("backward fills gradients with the analytic derivative") {
  SUBCASE("sum gives all-ones") {
    Tensor x = Tensor::param({3}, {1, 2, 3});
    backward(sum(x));
    CHECK(x.grad() == std::vector<double>{1, 1, 1});
  }
  SUBCASE("tanh chain matches the closed form") {
    Tensor w = Tensor::param({2}, {0.3, -0.8});
    const Tensor c = Tensor::constant({2}, {2.0, 0.5});
    backward(dot(tanh(w), c));
    for (std::size_t i = 0; i < 2; ++i) {
      const double t = std::tanh(w.at(i));
      CHECK(w.grad()[i] == doctest::Approx((1 - t * t) * c.at(i)).epsilon(1e-12));
    }
  }
  SUBCASE("gradients accumulate additively across uses") {
    Tensor x = Tensor::param({2}, {1.0, -1.0});
    backward(sum(add(x, x)));
    CHECK(x.grad() == std::vector<double>{2, 2});
  }
  SUBCASE("non-scalar loss is rejected") {
    Tensor x = Tensor::param({3}, {1, 2, 3});
    CHECK_THROWS_AS(backward(tanh(x)), ContractError);
  }
}

TEST_CASE("finite differences confirm gradients on random op graphs") {
  Rng rng(21);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Tensor x = random_vector(4, rng);
    Tensor w = random_matrix(3, 4, rng);
    Tensor b = random_vector(3, rng);
    const auto f = [&]() { return random_dag_loss(x, w, b, seed); };
    CHECK(grad_check(f, x) < 1e-4);
    CHECK(grad_check(f, w) < 1e-4);
    CHECK(grad_check(f, b) < 1e-4);
  }
}

TEST_CASE("grad_check is exact for linear functions") {
  Rng rng(5);
  Tensor x = random_vector(6, rng);
  const Tensor c = random_vector(6, rng, /*param=*/false);
  CHECK(grad_check([&]() { return dot(x, c); }, x) < 1e-9);
}

TEST_CASE("grad_check reports zero for a constant function") {
  Tensor x = Tensor::param({3}, {1, 2, 3});
  const Tensor c = Tensor::constant({3}, {4, 5, 6});
  CHECK(grad_check([&]() { return sum(c); }, x) == 0.0);
}

TEST_CASE("forward ops are bit-deterministic") {
  Rng rng(9);
  Tensor x = random_vector(5, rng);
  Tensor w = random_matrix(4, 5, rng);
  Tensor b = random_vector(4, rng);
  const auto run = [&]() {
    return logsumexp(tanh(affine(softmax(x), w, b))).item();
  };
  CHECK(run() == run());
}

TEST_CASE("sgd applies lr times gradient") {
  ParameterStore store;
  Tensor w = store.create("w", {1}, {1.0});
  backward(smul(sum(w), Tensor::scalar(0.5)));
  Optimizer opt(SgdSpec{0.1});
  opt.step(store);
  CHECK(w.at(0) == doctest::Approx(0.95).epsilon(1e-15));
  // step() zeroes gradients afterwards.
  CHECK(w.grad() == std::vector<double>{0.0});
}

TEST_CASE("zero gradients leave parameters unchanged") {
  ParameterStore store;
  Tensor w = store.create("w", {2}, {1.0, -2.0});
  backward(smul(sum(w), Tensor::scalar(0.0)));
  Optimizer opt(SgdSpec{0.1});
  opt.step(store);
  CHECK(w.value() == std::vector<double>{1.0, -2.0});
}

TEST_CASE("stepping without any gradients is a contract violation") {
  ParameterStore store;
  store.create("w", {2}, {1.0, -2.0});
  Optimizer opt(SgdSpec{0.1});
  CHECK_THROWS_AS(opt.step(store), ContractError);
}

TEST_CASE("adam first step magnitude matches the hand-executed update") {
  ParameterStore store;
  Tensor w = store.create("w", {1}, {1.0});
  backward(sum(w));  // gradient 1
  const AdamSpec spec;
  Optimizer opt(spec);
  opt.step(store);

  // One update by hand: m=(1-b1)g, v=(1-b2)g^2, bias-corrected both are 1.
  const double m_hat = (1 - spec.beta1) * 1.0 / (1 - spec.beta1);
  const double v_hat = (1 - spec.beta2) * 1.0 / (1 - spec.beta2);
  const double delta = spec.lr * m_hat / (std::sqrt(v_hat) + spec.eps);
  CHECK(1.0 - w.at(0) == doctest::Approx(delta).epsilon(1e-12));
  CHECK(delta == doctest::Approx(spec.lr).epsilon(1e-6));
}

TEST_CASE("glorot initialization is seeded and bounded") {
  Rng r1(42), r2(42), r3(43);
  const Tensor a = glorot_init({4, 6}, r1);
  const Tensor b = glorot_init({4, 6}, r2);
  const Tensor c = glorot_init({4, 6}, r3);
  CHECK(a.value() == b.value());
  CHECK(a.value() != c.value());
  const double bound = std::sqrt(6.0 / (4 + 6));
  for (double v : a.value()) {
    CHECK(std::abs(v) <= bound);
  }
}

TEST_CASE("parameter store checkpoints round-trip") {
  testutil::TempDir dir;
  Rng rng(1);
  ParameterStore store;
  store.create_glorot("layer.w", {3, 4}, rng);
  store.create_zeros("layer.b", {3});
  store.create("scalars", {2}, {1.5, -2.5});
  store.save(dir / "params.bin");

  SUBCASE("fresh store recreates every tensor") {
    ParameterStore loaded;
    loaded.load(dir / "params.bin");
    CHECK(loaded.names() == store.names());
    for (const auto& name : store.names()) {
      CHECK(loaded.get(name).shape() == store.get(name).shape());
      CHECK(loaded.get(name).value() == store.get(name).value());
    }
  }
  SUBCASE("existing names are validated against the checkpoint shape") {
    ParameterStore loaded;
    loaded.create_zeros("layer.w", {2, 2});
    CHECK_THROWS_AS(loaded.load(dir / "params.bin"), ParseError);
  }
  SUBCASE("duplicate parameter names are rejected") {
    CHECK_THROWS_AS(store.create_zeros("layer.w", {3, 4}), ContractError);
  }
  SUBCASE("total_values sums every parameter") {
    CHECK(store.total_values() == 12 + 3 + 2);
  }
}
