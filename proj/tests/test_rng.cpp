#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "qdplan/rng.hpp"

using namespace qdplan;

TEST_SUITE_BEGIN("rng");

TEST_CASE("same seed, same stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.uniform() == b.uniform());
  Rng c(43);
  int same = 0;
  Rng a2(42);
  for (int i = 0; i < 1000; ++i) same += (a2.uniform() == c.uniform());
  CHECK(same < 5);
}

TEST_CASE("uniform() lies in [0,1) and fills the range") {
  Rng rng(7);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.001);
  CHECK(hi > 0.999);
}

TEST_CASE("uniform(lo,hi) stays inside and centers correctly") {
  Rng rng(11);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform(-3.0, 5.0);
    CHECK(u >= -3.0);
    CHECK(u < 5.0);
    sum += u;
  }
  // mean 1, var 16/3; 5-sigma band on the sample mean
  CHECK(std::abs(sum / n - 1.0) < 5.0 * std::sqrt(16.0 / 3.0 / n));
}

TEST_CASE("uniform_int covers every bucket without bias") {
  Rng rng(13);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    int v = rng.uniform_int(7);
    REQUIRE(v >= 0);
    REQUIRE(v < 7);
    ++counts[v];
  }
  for (int c : counts) CHECK(std::abs(c - n / 7) < 5 * std::sqrt(n / 7.0));
}

TEST_CASE("normal() has unit moments") {
  Rng rng(17);
  double s1 = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    s1 += z;
    s2 += z * z;
  }
  CHECK(std::abs(s1 / n) < 5.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(s2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("split streams are distinct and reproducible") {
  Rng root(99);
  Rng s0 = root.split(0);
  Rng s1 = root.split(1);
  Rng s0_again = Rng(99).split(0);
  int same01 = 0;
  for (int i = 0; i < 100; ++i) {
    double a = s0.uniform(), b = s1.uniform();
    same01 += (a == b);
    CHECK(a == s0_again.uniform());
  }
  CHECK(same01 == 0);
  // splitting does not disturb the parent stream
  Rng fresh(99);
  fresh.split(12345);
  Rng untouched(99);
  CHECK(fresh.uniform() == untouched.uniform());
}

TEST_CASE("mix64 separates nearby keys") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 100; ++s)
    for (std::uint64_t k = 0; k < 100; ++k) seen.insert(mix64(s, k));
  CHECK(seen.size() == 10000);
  CHECK(mix64(1, 2) != mix64(2, 1));
  CHECK(mix64(1, 2, 3) != mix64(1, 2, 4));
}

TEST_SUITE_END();
