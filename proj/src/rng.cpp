#include "swapreg/rng.hpp"

namespace swapreg {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

namespace {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                          std::uint64_t index) {
  // Two splitmix steps after folding in each component; one step already
  // decorrelates, the second guards against the master/index being chosen
  // adversarially close together (consecutive seeds are the common case).
  std::uint64_t s = master ^ fnv1a64(purpose);
  splitmix64(s);
  s ^= index * 0x9e3779b97f4a7c15ull;
  std::uint64_t out = splitmix64(s);
  out ^= splitmix64(s);
  return out;
}

std::uint64_t Rng::next_below(std::uint64_t n) {
  // Rejection sampling on the top bits: draw until the value falls inside
  // the largest multiple of n, then reduce. Expected < 2 draws.
  const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
  for (;;) {
    std::uint64_t v = gen_();
    if (v < limit) return v % n;
  }
}

}  // namespace swapreg
