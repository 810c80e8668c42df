#include <cmath>
#include <limits>

#include "eaglass/kernels.hpp"

namespace eaglass::kernels {

namespace {

void butterfly_scalar(double* v, std::size_t n, unsigned bit, double same, double diff) {
  const std::size_t stride = std::size_t{1} << bit;
  for (std::size_t base = 0; base < n; base += 2 * stride) {
    for (std::size_t j = base; j < base + stride; ++j) {
      const double a = v[j];
      const double b = v[j + stride];
      v[j] = same * a + diff * b;
      v[j + stride] = diff * a + same * b;
    }
  }
}

void multiply_scalar(double* v, const double* d, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] *= d[i];
}

void mul_into_scalar(double* out, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy_scalar(double* y, const double* x, double a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void add_scalar_scalar(double* v, double c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] += c;
}

void scale_scalar(double* v, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] *= s;
}

double max_scalar(const double* v, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = v[i] > m ? v[i] : m;
  return m;
}

double sum_scalar(const double* v, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += v[i];
  return s;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

// Shared by every table; there is no vector exp with matching accuracy.
void exp_shift_reference(double* out, const double* in, double shift, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(in[i] - shift);
}

const KernelTable& scalar_table() {
  static const KernelTable table{
      "scalar",         butterfly_scalar, multiply_scalar, mul_into_scalar, axpy_scalar,
      add_scalar_scalar, scale_scalar,    max_scalar,      sum_scalar,      dot_scalar,
      exp_shift_reference,
  };
  return table;
}

}  // namespace eaglass::kernels
