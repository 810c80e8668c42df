#include <bit>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "eaglass/kernels.hpp"

using namespace eaglass::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed, double lo = -3.0, double hi = 3.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("avx2 kernels match the scalar reference") {
  const KernelTable* v = avx2_table();
  if (v == nullptr) {
    MESSAGE("avx2 variant unavailable on this host; equivalence test skipped");
    return;
  }
  const KernelTable& s = scalar_table();
  for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 16u, 33u, 1024u, 4099u}) {
    const auto a = random_vec(n, 11 + n), b = random_vec(n, 23 + n);

    for (unsigned bit = 0; std::has_single_bit(n) && (std::size_t{1} << (bit + 1)) <= n; ++bit) {
      auto x = a, y = a;
      s.butterfly(x.data(), n, bit, 0.7, 0.2);
      v->butterfly(y.data(), n, bit, 0.7, 0.2);
      CHECK(bit_equal(x, y));
    }
    {
      auto x = a, y = a;
      s.multiply(x.data(), b.data(), n);
      v->multiply(y.data(), b.data(), n);
      CHECK(bit_equal(x, y));
    }
    {
      std::vector<double> x(n), y(n);
      s.mul_into(x.data(), a.data(), b.data(), n);
      v->mul_into(y.data(), a.data(), b.data(), n);
      CHECK(bit_equal(x, y));
    }
    {
      auto x = a, y = a;
      s.axpy(x.data(), b.data(), -1.25, n);
      v->axpy(y.data(), b.data(), -1.25, n);
      CHECK(bit_equal(x, y));
    }
    {
      auto x = a, y = a;
      s.add_scalar(x.data(), 0.3, n);
      v->add_scalar(y.data(), 0.3, n);
      CHECK(bit_equal(x, y));
      s.scale(x.data(), 1.7, n);
      v->scale(y.data(), 1.7, n);
      CHECK(bit_equal(x, y));
    }
    CHECK(s.max(a.data(), n) == v->max(a.data(), n));
    CHECK(v->sum(a.data(), n) == doctest::Approx(s.sum(a.data(), n)).epsilon(1e-13));
    CHECK(v->dot(a.data(), b.data(), n) == doctest::Approx(s.dot(a.data(), b.data(), n)).epsilon(1e-12));
    {
      std::vector<double> x(n), y(n);
      s.exp_shift(x.data(), a.data(), 1.5, n);
      v->exp_shift(y.data(), a.data(), 1.5, n);
      CHECK(bit_equal(x, y));
    }
  }
}

TEST_CASE("scalar butterfly applies the 2x2 coupling matrix") {
  const KernelTable& s = scalar_table();
  std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  s.butterfly(v.data(), v.size(), 1, 2.0, 0.5);
  CHECK(v[0] == 2.0 * 1.0 + 0.5 * 3.0);
  CHECK(v[2] == 0.5 * 1.0 + 2.0 * 3.0);
  CHECK(v[1] == 2.0 * 2.0 + 0.5 * 4.0);
  CHECK(v[3] == 0.5 * 2.0 + 2.0 * 4.0);
}

TEST_CASE("variant selection") {
  CHECK(select("scalar"));
  CHECK(std::string_view(active().name) == "scalar");
  CHECK_FALSE(select("neon-that-does-not-exist"));
  select("auto");
}
