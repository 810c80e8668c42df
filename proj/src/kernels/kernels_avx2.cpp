// Compiled with -mavx2 (and without -mfma, so products are never contracted
// and the elementwise kernels match the scalar table bit for bit).

#include <immintrin.h>

#include <limits>

#include "eaglass/kernels.hpp"

namespace eaglass::kernels {

void exp_shift_reference(double* out, const double* in, double shift, std::size_t n);

namespace avx2 {

namespace {

inline __m256d combine(__m256d same, __m256d diff, __m256d a, __m256d b) {
  return _mm256_add_pd(_mm256_mul_pd(same, a), _mm256_mul_pd(diff, b));
}

void butterfly(double* v, std::size_t n, unsigned bit, double same, double diff) {
  const std::size_t stride = std::size_t{1} << bit;
  const __m256d s = _mm256_set1_pd(same);
  const __m256d d = _mm256_set1_pd(diff);
  if (n < 4) {
    scalar_table().butterfly(v, n, bit, same, diff);
    return;
  }
  if (bit == 0) {
    // lanes [a0 b0 a1 b1]: partner is the neighbouring lane
    for (std::size_t i = 0; i < n; i += 4) {
      const __m256d x = _mm256_loadu_pd(v + i);
      const __m256d p = _mm256_permute_pd(x, 0b0101);
      _mm256_storeu_pd(v + i, combine(s, d, x, p));
    }
    return;
  }
  if (bit == 1) {
    // lanes [a0 a1 b0 b1]: partner is the other 128-bit half
    for (std::size_t i = 0; i < n; i += 4) {
      const __m256d x = _mm256_loadu_pd(v + i);
      const __m256d p = _mm256_permute2f128_pd(x, x, 0x01);
      _mm256_storeu_pd(v + i, combine(s, d, x, p));
    }
    return;
  }
  for (std::size_t base = 0; base < n; base += 2 * stride) {
    double* lo = v + base;
    double* hi = lo + stride;
    for (std::size_t j = 0; j < stride; j += 4) {
      const __m256d a = _mm256_loadu_pd(lo + j);
      const __m256d b = _mm256_loadu_pd(hi + j);
      _mm256_storeu_pd(lo + j, combine(s, d, a, b));
      _mm256_storeu_pd(hi + j, combine(d, s, a, b));
    }
  }
}

void multiply(double* v, const double* d, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(v + i, _mm256_mul_pd(_mm256_loadu_pd(v + i), _mm256_loadu_pd(d + i)));
  }
  for (; i < n; ++i) v[i] *= d[i];
}

void mul_into(double* out, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy(double* y, const double* x, double a, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d p = _mm256_mul_pd(av, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), p));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void add_scalar(double* v, double c, std::size_t n) {
  const __m256d cv = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(v + i, _mm256_add_pd(_mm256_loadu_pd(v + i), cv));
  for (; i < n; ++i) v[i] += c;
}

void scale(double* v, double s, std::size_t n) {
  const __m256d sv = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(v + i, _mm256_mul_pd(_mm256_loadu_pd(v + i), sv));
  for (; i < n; ++i) v[i] *= s;
}

inline double hsum(__m256d x) {
  const __m128d lo = _mm256_castpd256_pd128(x);
  const __m128d hi = _mm256_extractf128_pd(x, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double max(const double* v, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  if (n >= 4) {
    __m256d acc = _mm256_loadu_pd(v);
    for (i = 4; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(v + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    for (double x : lanes) m = x > m ? x : m;
  }
  for (; i < n; ++i) m = v[i] > m ? v[i] : m;
  return m;
}

double sum(const double* v, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(v + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += v[i];
  return s;
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{
      "avx2", butterfly, multiply, mul_into, axpy, add_scalar, scale, max, sum, dot, exp_shift_reference,
  };
  return t;
}

}  // namespace avx2

}  // namespace eaglass::kernels
