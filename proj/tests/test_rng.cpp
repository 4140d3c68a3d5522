#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "rkm/rng.hpp"

using rkm::Rng;

TEST_CASE("frozen output sequence") {
  // Values pinned against an independent implementation of the same
  // generator; a change here breaks every stored experiment seed.
  Rng r(42);
  CHECK(r.next_u64() == 0xbdd732262feb6e95ull);
  CHECK(r.next_u64() == 0x28efe333b266f103ull);
  CHECK(r.next_u64() == 0x47526757130f9f52ull);

  Rng u(42);
  CHECK(u.uniform() == (0xbdd732262feb6e95ull >> 11) * 0x1.0p-53);
  CHECK(u.uniform() == doctest::Approx(0.1599103928769201).epsilon(1e-15));

  CHECK(rkm::derive_seed(1, 0) == 0x9e0160293a33aaf7ull);
  CHECK(rkm::derive_seed(1, 1) == 0x5c52bd4054e958c9ull);

  Rng g(7);
  CHECK(g.gaussian() == doctest::Approx(1.3649922974572284).epsilon(1e-12));
}

TEST_CASE("determinism and stream independence") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng s0 = Rng::for_stream(9, 0);
  Rng s1 = Rng::for_stream(9, 1);
  int agree = 0;
  for (int i = 0; i < 64; ++i) agree += (s0.next_u64() == s1.next_u64());
  CHECK(agree == 0);
}

TEST_CASE("uniform range and moments") {
  Rng r(2024);
  double sum = 0.0;
  constexpr int kDraws = 10000;
  for (int i = 0; i < kDraws; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / kDraws == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("gaussian moments") {
  Rng r(17);
  double sum = 0.0, sum_sq = 0.0;
  constexpr int kDraws = 20000;
  for (int i = 0; i < kDraws; ++i) {
    const double z = r.gaussian();
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / kDraws;
  const double var = sum_sq / kDraws - mean * mean;
  CHECK(std::abs(mean) < 0.05);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("gaussian consumes exactly two uniforms") {
  Rng a(5), b(5);
  a.gaussian();
  b.uniform();
  b.uniform();
  CHECK(a.next_u64() == b.next_u64());
}
