#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace swapreg::kernels {

/// Dense double-precision primitives behind the regret accounting and the
/// Monte-Carlo campaigns, plus the packed-word popcount kernel behind all
/// sign-vector inner products.
///
/// Each operation has a scalar reference implementation (namespace scalar,
/// always compiled, used directly by the equivalence tests) and may have a
/// SIMD variant. Which variant runs is decided once, at first use, from
/// cpuid; callers never see the difference except in throughput. The SIMD
/// dot/sum reassociate their accumulation, so results may differ from the
/// scalar reference in the last few ulps; tests budget for that. The
/// popcount kernel is exact in every variant.

/// Inner product sum_i a[i] * b[i]. Sizes must match.
double dot(std::span<const double> a, std::span<const double> b);

/// y[i] += alpha * x[i]. Sizes must match.
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// sum_i a[i].
double sum(std::span<const double> a);

/// sum_i popcount(a[i] ^ b[i]); the Hamming distance of two packed bit
/// vectors. Sizes must match.
std::int64_t xor_popcount(std::span<const std::uint64_t> a,
                          std::span<const std::uint64_t> b);

/// Name of the variant the dispatch table selected ("avx2" or "scalar").
const char* active_backend();

namespace scalar {
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double sum(std::span<const double> a);
std::int64_t xor_popcount(std::span<const std::uint64_t> a,
                          std::span<const std::uint64_t> b);
}  // namespace scalar

}  // namespace swapreg::kernels
