#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace swapreg {

/// splitmix64 step: advances the state and returns a well-mixed 64-bit word.
/// Used for seed derivation, not for bulk random draws.
std::uint64_t splitmix64(std::uint64_t& state);

/// Derives an independent stream seed from (master, purpose, index).
///
/// Every random decision in the library draws from a stream keyed by a
/// purpose tag ("embedding", "adversary", "pool", ...) so that adding a new
/// consumer of randomness never perturbs the draws of existing ones, and so
/// that streams that must be statistically independent (the learner's
/// strategy pool vs. the hidden embedding) really are.
std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                          std::uint64_t index = 0);

/// Deterministic random source. Wraps mt19937_64 and provides the handful of
/// helper draws we need with fixed, portable algorithms; std::uniform_*
/// distributions are avoided because the standard does not pin their
/// algorithms across library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in {0, ..., n-1}, unbiased via rejection. n must be positive.
  std::uint64_t next_below(std::uint64_t n);

  bool next_bernoulli(double p) { return next_unit() < p; }

  /// A single fair sign bit, +1 or -1.
  int next_sign() { return (gen_() >> 63) ? 1 : -1; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace swapreg
