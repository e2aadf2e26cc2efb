#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cbo/exact_sum.hpp"

using cbo::ExactSum;

namespace {

double sum_of(const std::vector<double>& v) {
  ExactSum s;
  for (double x : v) s.add(x);
  return s.value();
}

}  // namespace

TEST_CASE("simple exact values") {
  CHECK(sum_of({}) == 0.0);
  CHECK(sum_of({1.5}) == 1.5);
  CHECK(sum_of({-1.5}) == -1.5);
  CHECK(sum_of({1e16, 1.0, -1e16}) == 1.0);
  CHECK(sum_of({1.0, 1e100, -1e100}) == 1.0);
  CHECK(sum_of({std::ldexp(1.0, 500), std::ldexp(1.0, -500), -std::ldexp(1.0, 500)}) ==
        std::ldexp(1.0, -500));
  CHECK(sum_of({0.1, -0.1}) == 0.0);
  CHECK(sum_of({2.0, 3.0, 4.0}) == 9.0);
}

TEST_CASE("matches integer oracle on scaled integers") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::int64_t> dist(-(1ll << 40), 1ll << 40);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> xs;
    __int128 total = 0;
    for (int i = 0; i < 200; ++i) {
      const std::int64_t k = dist(rng);
      total += k;
      xs.push_back(std::ldexp(static_cast<double>(k), -20));
    }
    const double expected = std::ldexp(static_cast<double>(static_cast<std::int64_t>(total)), -20);
    CHECK(sum_of(xs) == expected);
  }
}

TEST_CASE("order independence, bitwise") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mag(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-300, 300);
  std::vector<double> xs;
  for (int i = 0; i < 500; ++i) xs.push_back(std::ldexp(mag(rng), expo(rng)));
  const double ref = sum_of(xs);
  for (int rep = 0; rep < 50; ++rep) {
    std::shuffle(xs.begin(), xs.end(), rng);
    CHECK(sum_of(xs) == ref);
  }
}

TEST_CASE("correct rounding against long-run cancellation") {
  // 2^53 + 1 is not representable; adding the halves exactly must round to
  // even (2^53), and with an extra ulp of dust must round up.
  const double big = std::ldexp(1.0, 53);
  CHECK(sum_of({big, 0.5, 0.5}) == big);                       // ties to even
  CHECK(sum_of({big, 0.5, 0.5, std::ldexp(1.0, -60)}) == big + 2.0);
  CHECK(sum_of({big, 1.5}) == big + 2.0);
}

TEST_CASE("merge equals concatenation") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> mag(-100.0, 100.0);
  std::vector<double> xs;
  for (int i = 0; i < 300; ++i) xs.push_back(mag(rng));
  ExactSum a, b, all;
  for (int i = 0; i < 300; ++i) {
    (i % 2 ? a : b).add(xs[i]);
    all.add(xs[i]);
  }
  a.merge(b);
  CHECK(a.value() == all.value());
}

TEST_CASE("add_product is exact") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::int64_t> dist(-(1ll << 20), 1ll << 20);
  for (int rep = 0; rep < 200; ++rep) {
    const std::int64_t i = dist(rng), j = dist(rng);
    ExactSum s;
    s.add_product(std::ldexp(static_cast<double>(i), -10), std::ldexp(static_cast<double>(j), -10));
    const __int128 prod = static_cast<__int128>(i) * j;
    CHECK(s.value() == std::ldexp(static_cast<double>(static_cast<std::int64_t>(prod)), -20));
  }
  // Cancellation across products: a*b - b*a == 0 exactly.
  ExactSum s;
  s.add_product(0.1, 0.3);
  s.add_product(-0.3, 0.1);
  CHECK(s.value() == 0.0);
}

TEST_CASE("subnormal and tiny magnitudes") {
  const double tiny = std::ldexp(1.0, -1074);
  CHECK(sum_of({tiny, tiny, tiny}) == 3 * tiny);
  CHECK(sum_of({tiny, -tiny}) == 0.0);
}
