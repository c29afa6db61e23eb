#include <cmath>
#include <cstdint>
#include <vector>

#include "asjr/rng.hpp"
#include "doctest.h"

using namespace asjr;

/* Reference outputs computed with an independent implementation of
 * splitmix64 + xoshiro256++ (integer arithmetic only, so they are exact). */
TEST_CASE("generator reproduces the reference stream") {
  Rng r(42);
  CHECK(r.next_u64() == 0xd0764d4f4476689full);
  CHECK(r.next_u64() == 0x519e4174576f3791ull);
  CHECK(r.next_u64() == 0xfbe07cfb0c24ed8cull);

  Rng u(7);
  CHECK(u.uniform01() == doctest::Approx(0.05536043647833311).epsilon(1e-15));
  CHECK(u.uniform01() == doctest::Approx(0.17211585444811772).epsilon(1e-15));
  CHECK(u.uniform01() == doctest::Approx(0.7175761283586594).epsilon(1e-15));
}

TEST_CASE("identical seeds give identical streams, different seeds differ") {
  Rng a(123), b(123), c(124);
  bool all_equal = true, any_diff = false;
  for (int k = 0; k < 64; ++k) {
    const std::uint64_t va = a.next_u64();
    all_equal = all_equal && va == b.next_u64();
    any_diff = any_diff || va != c.next_u64();
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("seed mixing is order-sensitive and matches the reference") {
  CHECK(mix_seed(1, 2, 3) == 0x097d99ccfc4c0ed1ull);
  CHECK(mix_seed(1, 3, 2) == 0x266fa82faa42055dull);
  CHECK(mix_seed(9, 9, 9, 9) == 0xda93f03b7c88d41eull);
  CHECK(mix_seed(1, 2, 3) != mix_seed(2, 1, 3));
  CHECK(mix_seed(5, 0, 1) != mix_seed(5, 1, 0));
}

TEST_CASE("derived streams are independent per purpose and tag") {
  Rng trial = derive_stream(99, StreamKind::Trial, 0);
  Rng delay = derive_stream(99, StreamKind::LinkDelay, 0);
  Rng delay01 = derive_stream(99, StreamKind::LinkDelay, 0, 1);
  Rng delay10 = derive_stream(99, StreamKind::LinkDelay, 1, 0);
  CHECK(trial.next_u64() != delay.next_u64());
  CHECK(delay01.next_u64() != delay10.next_u64());
}

TEST_CASE("uniform01 lies in [0,1) with mean near one half") {
  Rng r(2024);
  double sum = 0.0;
  bool in_range = true;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    const double v = r.uniform01();
    in_range = in_range && v >= 0.0 && v < 1.0;
    sum += v;
  }
  CHECK(in_range);
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("uniform(lo,hi) stays inside the interval") {
  Rng r(5);
  bool ok = true;
  for (int k = 0; k < 10000; ++k) {
    const double v = r.uniform(0.0005, 0.002);
    ok = ok && v >= 0.0005 && v < 0.002;
  }
  CHECK(ok);
}

TEST_CASE("uniform_below covers [0,n) fairly") {
  Rng r(8);
  std::vector<int> hits(7, 0);
  for (int k = 0; k < 70000; ++k) {
    const std::uint32_t v = r.uniform_below(7);
    REQUIRE(v < 7);
    ++hits[v];
  }
  for (int h : hits) CHECK(h == doctest::Approx(10000).epsilon(0.05));
}

TEST_CASE("bernoulli matches its probability") {
  Rng r(31);
  int hits = 0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) hits += r.bernoulli(0.04) ? 1 : 0;
  /* 6 sigma around 0.04 with n=2e5 is about +-0.0026 */
  CHECK(static_cast<double>(hits) / n == doctest::Approx(0.04).epsilon(0.07));
}

TEST_CASE("normal sampler has the requested moments") {
  Rng r(77);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int k = 0; k < n; ++k) {
    const double v = r.normal(0.2, 0.1);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(mean == doctest::Approx(0.2).epsilon(0.01));
  CHECK(std::sqrt(var) == doctest::Approx(0.1).epsilon(0.02));
}
