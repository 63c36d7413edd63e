#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hjprox/rng.hpp"

using namespace hjprox;

TEST_CASE("normal sampler moments and tails") {
  Rng rng(12345);
  const int n = 2'000'000;
  double sum = 0, sum2 = 0, sum3 = 0, sum4 = 0;
  int gt1 = 0, gt2 = 0, gt3 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.next_normal();
    sum += x;
    sum2 += x * x;
    sum3 += x * x * x;
    sum4 += x * x * x * x;
    const double a = std::abs(x);
    gt1 += a > 1.0;
    gt2 += a > 2.0;
    gt3 += a > 3.0;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  // 5-sigma Monte Carlo bands
  CHECK(std::abs(mean) < 5.0 / std::sqrt(double(n)));
  CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / double(n)));
  CHECK(std::abs(sum3 / n) < 5.0 * std::sqrt(15.0 / double(n)));
  CHECK(std::abs(sum4 / n - 3.0) < 5.0 * std::sqrt(96.0 / double(n)));
  // two-sided tail masses: 2*(1-Phi(k))
  auto tail = [](double k) { return std::erfc(k / std::sqrt(2.0)); };
  for (auto [count, k] : {std::pair{gt1, 1.0}, {gt2, 2.0}, {gt3, 3.0}}) {
    const double p = tail(k);
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(double(count) / n - p) < 6.0 * se);
  }
}

TEST_CASE("equal seeds give identical streams, distinct seeds differ") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 1000; ++i) {
    const double va = a.next_normal(), vb = b.next_normal(),
                 vc = c.next_normal();
    all_equal = all_equal && (va == vb);
    any_diff = any_diff || (va != vc);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("derive_seed separates streams") {
  CHECK(derive_seed(7, 0) != derive_seed(7, 1));
  CHECK(derive_seed(7, 0) != derive_seed(8, 0));
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
}

TEST_CASE("uniforms stay in [0,1)") {
  Rng rng(9);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.next_unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}
