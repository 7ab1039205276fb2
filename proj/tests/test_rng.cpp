#include <doctest.h>

#include <set>

#include "swapreg/rng.hpp"

using namespace swapreg;

TEST_CASE("splitmix64 matches the reference sequence") {
  std::uint64_t state = 0;
  CHECK(splitmix64(state) == 0xe220a8397b1dcdafull);
  CHECK(splitmix64(state) == 0x6e789e6aa1b965f4ull);
  CHECK(splitmix64(state) == 0x06c45d188009454full);
}

TEST_CASE("same seed reproduces the same stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derive_seed separates purposes, indices and masters") {
  const std::uint64_t base = derive_seed(7, "embedding");
  CHECK(base == derive_seed(7, "embedding"));
  std::set<std::uint64_t> seen{base};
  CHECK(seen.insert(derive_seed(7, "adversary")).second);
  CHECK(seen.insert(derive_seed(7, "pool")).second);
  CHECK(seen.insert(derive_seed(8, "embedding")).second);
  CHECK(seen.insert(derive_seed(7, "embedding", 1)).second);
  CHECK(seen.insert(derive_seed(7, "embedding", 2)).second);
}

TEST_CASE("next_unit stays in [0, 1)") {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.next_unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("next_below is in range and roughly uniform") {
  Rng rng(5);
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < 3000; ++i) {
    const std::uint64_t v = rng.next_below(3);
    REQUIRE(v < 3);
    ++counts[v];
  }
  for (int c : counts) {
    CHECK(c > 800);
    CHECK(c < 1200);
  }
  CHECK(rng.next_below(1) == 0);
}

TEST_CASE("next_sign is a fair +1/-1 coin") {
  Rng rng(9);
  int pos = 0;
  for (int i = 0; i < 2000; ++i) {
    const int s = rng.next_sign();
    REQUIRE((s == 1 || s == -1));
    if (s == 1) ++pos;
  }
  CHECK(pos > 850);
  CHECK(pos < 1150);
}

TEST_CASE("next_bernoulli respects edge probabilities") {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) CHECK_FALSE(rng.next_bernoulli(0.0));
  for (int i = 0; i < 100; ++i) CHECK(rng.next_bernoulli(1.0));
}
