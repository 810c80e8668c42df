#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "eaglass/error.hpp"
#include "eaglass/kernels.hpp"
#include "spin_system.hpp"

namespace eaglass::detail {

namespace {

// Columns are slices at fixed longitudinal coordinate; the column state holds
// the W spins of a slice, bit r set meaning spin -1 in row r.
struct Layout {
  int lax = 0;  // longitudinal axis
  int wax = -1; // width axis (-1 for a chain)
  int width = 1;
  int columns = 1;
};

Layout layout_of(const Region& box) {
  Layout l;
  if (box.dim() == 1) {
    l.columns = box.extent(0);
    return l;
  }
  const bool axis0_longer = box.extent(0) >= box.extent(1);
  l.lax = axis0_longer ? 0 : 1;
  l.wax = 1 - l.lax;
  l.width = box.extent(l.wax);
  l.columns = box.extent(l.lax);
  return l;
}

struct ColumnLink {
  int row;
  double k;
  int constraint = 0;  // 0: none, otherwise required product sign
};

struct DiagTerm {
  int row_a;
  int row_b;  // -1 for a field
  double c;
  int constraint = 0;  // required sign of s_a s_b, or of g s_a for a field
  int ghost = 1;
};

}  // namespace

void check_transfer_eligible(const SpinSystem& sys, int width_cap) {
  if (sys.box.dim() > 2) {
    throw UnsupportedError("transfer matrix supports d <= 2, got d = " + std::to_string(sys.box.dim()));
  }
  const Layout l = layout_of(sys.box);
  if (l.width > width_cap) {
    throw UnsupportedError("strip width " + std::to_string(l.width) + " exceeds the transfer cap of " +
                           std::to_string(width_cap));
  }
}

double transfer_log_partition(const SpinSystem& sys, int width_cap, const std::optional<Constraint>& constraint) {
  check_transfer_eligible(sys, width_cap);
  const Layout lay = layout_of(sys.box);
  const Region& box = sys.box;
  const std::size_t states = std::size_t{1} << lay.width;
  const auto column_of = [&](int site) { return box.site_at(site)[lay.lax] - box.origin()[lay.lax]; };
  const auto row_of = [&](int site) {
    return lay.wax < 0 ? 0 : box.site_at(site)[lay.wax] - box.origin()[lay.wax];
  };
  const auto required = [&](bool field, std::size_t index) {
    if (constraint && constraint->term.field == field && constraint->term.index == index) return constraint->sign;
    return 0;
  };

  std::vector<std::vector<DiagTerm>> diag_terms(lay.columns);
  std::vector<std::vector<ColumnLink>> links(lay.columns);  // links[c]: column c -> c+1
  std::vector<ColumnLink> closing;                         // column L-1 -> column 0
  for (std::size_t i = 0; i < sys.bonds.size(); ++i) {
    const Bond& b = sys.bonds[i];
    const double k = sys.beta * b.coupling;
    const int ca = column_of(b.a), cb = column_of(b.b);
    if (b.axis == lay.lax && lay.columns >= 2) {
      const ColumnLink link{row_of(b.a), k, required(false, i)};
      if (b.wraps) closing.push_back(link);
      else links[ca].push_back(link);
    } else {
      if (ca != cb) throw UnsupportedError("bond does not fit the column layout");
      diag_terms[ca].push_back({row_of(b.a), row_of(b.b), k, required(false, i)});
    }
  }
  for (std::size_t i = 0; i < sys.fields.size(); ++i) {
    const Field& f = sys.fields[i];
    diag_terms[column_of(f.site)].push_back(
        {row_of(f.site), -1, sys.beta * f.coupling * f.ghost, required(true, i), f.ghost});
  }
  const bool trace = !closing.empty();

  std::vector<std::vector<double>> row_sign(lay.width, std::vector<double>(states));
  for (int r = 0; r < lay.width; ++r) {
    for (std::size_t s = 0; s < states; ++s) row_sign[r][s] = ((s >> r) & 1U) ? -1.0 : 1.0;
  }

  // Column factors exp(D - max D) with the maxima collected in `offset`.
  double offset = 0.0;
  std::vector<std::vector<double>> factor(lay.columns, std::vector<double>(states));
  std::vector<double> d(states), prod(states);
  for (int c = 0; c < lay.columns; ++c) {
    std::fill(d.begin(), d.end(), 0.0);
    std::vector<std::pair<std::vector<double>, int>> masks;
    for (const DiagTerm& t : diag_terms[c]) {
      std::span<const double> sign = row_sign[t.row_a];
      if (t.row_b >= 0) {
        kernels::mul_into(prod, row_sign[t.row_a], row_sign[t.row_b]);
        sign = prod;
      }
      kernels::axpy(d, sign, t.c);
      if (t.constraint != 0) {
        masks.emplace_back(std::vector<double>(sign.begin(), sign.end()), t.constraint * t.ghost);
      }
    }
    const double m = kernels::max(d);
    kernels::exp_shift(factor[c], d, m);
    offset += m;
    for (const auto& [sign, want] : masks) {
      for (std::size_t s = 0; s < states; ++s) {
        if (sign[s] * want < 0) factor[c][s] = 0.0;
      }
    }
  }

  const auto apply_links = [&](std::vector<double>& v, const std::vector<ColumnLink>& ls) {
    for (const ColumnLink& l : ls) {
      const double a = std::abs(l.k);
      double same = std::exp(l.k - a), diff = std::exp(-l.k - a);
      if (l.constraint > 0) diff = 0.0;
      if (l.constraint < 0) same = 0.0;
      kernels::butterfly(v, static_cast<unsigned>(l.row), same, diff);
    }
  };
  double link_offset = 0.0;
  for (const auto& ls : links) {
    for (const ColumnLink& l : ls) link_offset += std::abs(l.k);
  }
  for (const ColumnLink& l : closing) link_offset += std::abs(l.k);

  // Rescales by powers of two only, so the scale is carried exactly as an
  // integer exponent; v holds the remainder with its maximum in [1, 2).
  // Returns false when every weight vanished.
  const auto normalize = [](std::vector<double>& v, long& exponent) {
    const double m = kernels::max(v);
    if (!(m > 0.0)) return false;
    int e = 0;
    std::frexp(m, &e);
    kernels::scale(v, std::ldexp(1.0, 1 - e));
    exponent += e - 1;
    return true;
  };
  const auto propagate = [&](std::vector<double>& v, long& exponent) {
    for (int c = 0; c < lay.columns; ++c) {
      if (c > 0) apply_links(v, links[c - 1]);
      kernels::multiply(v, factor[c]);
      if (!normalize(v, exponent)) return false;
    }
    if (trace) apply_links(v, closing);
    return true;
  };
  // log(r 2^exponent) with r split into mantissa and exponent first, so an
  // exact power of two contributes a single multiple of log 2.
  const auto finish = [&](double r, long exponent) {
    int e = 0;
    const double f = std::frexp(r, &e);
    return offset + link_offset + static_cast<double>(exponent + e - 1) * std::numbers::ln2 + std::log(2 * f);
  };

  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<double> v(states);
  if (!trace) {
    std::fill(v.begin(), v.end(), 1.0);
    long exponent = 0;
    if (!propagate(v, exponent)) return kNegInf;
    return finish(kernels::sum(v), exponent);
  }
  std::vector<long> exponents(states);
  std::vector<double> diag(states);
  std::vector<bool> alive(states);
  long top = std::numeric_limits<long>::min();
  for (std::size_t j = 0; j < states; ++j) {
    std::fill(v.begin(), v.end(), 0.0);
    v[j] = 1.0;
    exponents[j] = 0;
    alive[j] = propagate(v, exponents[j]) && v[j] > 0.0;
    diag[j] = v[j];
    if (alive[j]) top = std::max(top, exponents[j]);
  }
  double total = 0.0;
  for (std::size_t j = 0; j < states; ++j) {
    if (alive[j]) total += std::ldexp(diag[j], static_cast<int>(exponents[j] - top));
  }
  if (!(total > 0.0)) return kNegInf;
  return finish(total, top);
}

}  // namespace eaglass::detail
