// AVX2 + FMA variants of the dense kernels. This translation unit is built
// with -mavx2 -mfma on x86-64 and must only be entered through the dispatch
// table in kernels.cpp, which checks cpuid first.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <bit>
#include <cstdint>
#include <span>

namespace swapreg::kernels::avx2 {

namespace {

/// Horizontal sum of the four lanes of an __m256d.
inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  std::size_t i = 0;
  // Two independent accumulators hide the FMA latency chain.
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i),
                           _mm256_loadu_pd(b.data() + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i + 4),
                           _mm256_loadu_pd(b.data() + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i),
                           _mm256_loadu_pd(b.data() + i), acc0);
    i += 4;
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y.data() + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x.data() + i), vy);
    _mm256_storeu_pd(y.data() + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum(std::span<const double> a) {
  const std::size_t n = a.size();
  std::size_t i = 0;
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a.data() + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(a.data() + i + 4));
  }
  if (i + 4 <= n) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a.data() + i));
    i += 4;
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i];
  return acc;
}

std::int64_t xor_popcount(std::span<const std::uint64_t> a,
                          std::span<const std::uint64_t> b) {
  const std::size_t n = a.size();
  std::size_t i = 0;
  // Nibble-table popcount: pshufb looks up the bit count of each half-byte,
  // psadbw folds the byte counts into per-lane 64-bit sums. Safe for any
  // input length we see (byte counts stay <= 8 before the fold).
  const __m256i nibble_counts = _mm256_setr_epi8(
      0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
      0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
  const __m256i low_mask = _mm256_set1_epi8(0x0f);
  __m256i acc = _mm256_setzero_si256();
  for (; i + 4 <= n; i += 4) {
    __m256i va = _mm256_loadu_si256(
        reinterpret_cast<const __m256i*>(a.data() + i));
    __m256i vb = _mm256_loadu_si256(
        reinterpret_cast<const __m256i*>(b.data() + i));
    __m256i v = _mm256_xor_si256(va, vb);
    __m256i lo = _mm256_and_si256(v, low_mask);
    __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low_mask);
    __m256i cnt = _mm256_add_epi8(_mm256_shuffle_epi8(nibble_counts, lo),
                                  _mm256_shuffle_epi8(nibble_counts, hi));
    acc = _mm256_add_epi64(acc, _mm256_sad_epu8(cnt, _mm256_setzero_si256()));
  }
  alignas(32) std::uint64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
  std::int64_t total = static_cast<std::int64_t>(lanes[0] + lanes[1] +
                                                 lanes[2] + lanes[3]);
  for (; i < n; ++i) total += std::popcount(a[i] ^ b[i]);
  return total;
}

}  // namespace swapreg::kernels::avx2

#endif  // x86-64
