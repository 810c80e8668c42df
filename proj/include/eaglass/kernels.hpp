#pragma once

// Data-parallel inner loops of the exact solvers.
//
// Each kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant compiled in its own translation unit. The active table is chosen
// once at first use from CPU features; the EAGLASS_SIMD environment variable
// ("scalar", "avx2", "auto") overrides the choice.
//
// Elementwise kernels produce bit-identical results in every variant (same
// operation order, no FMA contraction). Reductions (sum, dot) may differ in
// the last bits because lanes are accumulated separately.

#include <cstddef>
#include <span>
#include <string_view>

namespace eaglass::kernels {

struct KernelTable {
  const char* name;
  // n must be a multiple of 2 << bit. For every index pair (i, i | 1<<bit)
  // with bit clear in i:
  //   v[i]  <- same * v[i] + diff * v[j]
  //   v[j]  <- diff * v[i] + same * v[j]
  void (*butterfly)(double* v, std::size_t n, unsigned bit, double same, double diff);
  void (*multiply)(double* v, const double* d, std::size_t n);
  void (*mul_into)(double* out, const double* a, const double* b, std::size_t n);
  void (*axpy)(double* y, const double* x, double a, std::size_t n);
  void (*add_scalar)(double* v, double c, std::size_t n);
  void (*scale)(double* v, double s, std::size_t n);
  double (*max)(const double* v, std::size_t n);
  double (*sum)(const double* v, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*exp_shift)(double* out, const double* in, double shift, std::size_t n);
};

const KernelTable& scalar_table();
// nullptr when the binary was built without the variant or the CPU lacks it.
const KernelTable* avx2_table();

const KernelTable& active();
// Force a variant by name; returns false if it is unavailable.
bool select(std::string_view name);

inline void butterfly(std::span<double> v, unsigned bit, double same, double diff) {
  active().butterfly(v.data(), v.size(), bit, same, diff);
}
inline void multiply(std::span<double> v, std::span<const double> d) {
  active().multiply(v.data(), d.data(), v.size());
}
inline void mul_into(std::span<double> out, std::span<const double> a, std::span<const double> b) {
  active().mul_into(out.data(), a.data(), b.data(), out.size());
}
inline void axpy(std::span<double> y, std::span<const double> x, double a) {
  active().axpy(y.data(), x.data(), a, y.size());
}
inline void add_scalar(std::span<double> v, double c) { active().add_scalar(v.data(), c, v.size()); }
inline void scale(std::span<double> v, double s) { active().scale(v.data(), s, v.size()); }
inline double max(std::span<const double> v) { return active().max(v.data(), v.size()); }
inline double sum(std::span<const double> v) { return active().sum(v.data(), v.size()); }
inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void exp_shift(std::span<double> out, std::span<const double> in, double shift) {
  active().exp_shift(out.data(), in.data(), shift, out.size());
}

}  // namespace eaglass::kernels
