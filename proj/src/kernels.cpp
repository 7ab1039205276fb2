#include "swapreg/kernels.hpp"

#include <bit>
#include <cassert>

#include "swapreg/errors.hpp"

namespace swapreg::kernels {

namespace scalar {

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double sum(std::span<const double> a) {
  double acc = 0.0;
  for (double v : a) acc += v;
  return acc;
}

std::int64_t xor_popcount(std::span<const std::uint64_t> a,
                          std::span<const std::uint64_t> b) {
  assert(a.size() == b.size());
  std::int64_t acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += std::popcount(a[i] ^ b[i]);
  }
  return acc;
}

}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
// Definitions live in kernels_avx2.cpp, compiled with -mavx2 -mfma.
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double sum(std::span<const double> a);
std::int64_t xor_popcount(std::span<const std::uint64_t> a,
                          std::span<const std::uint64_t> b);
}  // namespace avx2
#endif

namespace {

struct Dispatch {
  double (*dot)(std::span<const double>, std::span<const double>);
  void (*axpy)(double, std::span<const double>, std::span<double>);
  double (*sum)(std::span<const double>);
  std::int64_t (*xor_popcount)(std::span<const std::uint64_t>,
                               std::span<const std::uint64_t>);
  const char* name;
};

Dispatch select() {
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    return {avx2::dot, avx2::axpy, avx2::sum, avx2::xor_popcount, "avx2"};
  }
#endif
  return {scalar::dot, scalar::axpy, scalar::sum, scalar::xor_popcount,
          "scalar"};
}

const Dispatch& table() {
  static const Dispatch d = select();
  return d;
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("kernels::dot: size mismatch");
  return table().dot(a, b);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size())
    throw DimensionError("kernels::axpy: size mismatch");
  table().axpy(alpha, x, y);
}

double sum(std::span<const double> a) { return table().sum(a); }

std::int64_t xor_popcount(std::span<const std::uint64_t> a,
                          std::span<const std::uint64_t> b) {
  if (a.size() != b.size())
    throw DimensionError("kernels::xor_popcount: size mismatch");
  return table().xor_popcount(a, b);
}

const char* active_backend() { return table().name; }

}  // namespace swapreg::kernels
