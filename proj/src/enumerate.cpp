#include <algorithm>
#include <cmath>

#include "eaglass/error.hpp"
#include "eaglass/kernels.hpp"
#include "spin_system.hpp"

namespace eaglass::detail {

namespace {

constexpr int kMaxLowBits = 12;
constexpr int kHardSpinLimit = 40;

}  // namespace

QuadraticForm log_weight_form(const SpinSystem& sys) {
  QuadraticForm q;
  for (const Bond& b : sys.bonds) q.pairs.push_back({b.a, b.b, sys.beta * b.coupling});
  for (const Field& f : sys.fields) q.fields.push_back({f.site, sys.beta * f.coupling * f.ghost});
  return q;
}

BlockEnumerator::BlockEnumerator(int n) : n_(n), k_(std::min(n, kMaxLowBits)) {
  const std::size_t m = block_size();
  signs_.resize(static_cast<std::size_t>(k_) * m);
  for (int j = 0; j < k_; ++j) {
    for (std::size_t l = 0; l < m; ++l) signs_[j * m + l] = ((l >> j) & 1U) ? -1.0 : 1.0;
  }
}

BlockEnumerator::Compiled::Compiled(const BlockEnumerator& en, const QuadraticForm& q) : en_(&en) {
  const int k = en.low_bits();
  const std::size_t m = en.block_size();
  base_.assign(m, 0.0);
  std::vector<double> prod(m);
  for (const PairTerm& p : q.pairs) {
    const bool la = p.a < k, lb = p.b < k;
    if (la && lb) {
      if (p.a == p.b) {
        kernels::add_scalar(base_, p.c);
        continue;
      }
      kernels::mul_into(prod, en.low_sign(p.a), en.low_sign(p.b));
      kernels::axpy(base_, prod, p.c);
    } else if (la) {
      cross_.push_back({p.a, p.b - k, p.c});
    } else if (lb) {
      cross_.push_back({p.b, p.a - k, p.c});
    } else {
      high_pairs_.push_back({p.a - k, p.b - k, p.c});
    }
  }
  for (const FieldTerm& f : q.fields) {
    if (f.site < k) kernels::axpy(base_, en.low_sign(f.site), f.c);
    else high_fields_.push_back({f.site - k, f.c});
  }
}

void BlockEnumerator::Compiled::evaluate(std::uint64_t high, std::span<double> out) const {
  const auto bit = [high](int i) { return ((high >> i) & 1U) ? -1.0 : 1.0; };
  double constant = 0.0;
  for (const PairTerm& p : high_pairs_) constant += p.c * bit(p.a) * bit(p.b);
  for (const FieldTerm& f : high_fields_) constant += f.c * bit(f.site);
  std::copy(base_.begin(), base_.end(), out.begin());
  kernels::add_scalar(out, constant);
  for (const Cross& c : cross_) kernels::axpy(out, en_->low_sign(c.low), c.c * bit(c.high));
}

void ScaledAccumulator::absorb(double shift, double mass, std::span<const double> companions) {
  if (shift > max_) {
    const double f = std::isinf(max_) ? 0.0 : std::exp(max_ - shift);
    mass_ = mass_ * f + mass;
    for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i] = sums_[i] * f + companions[i];
    max_ = shift;
  } else {
    const double f = std::exp(shift - max_);
    mass_ += mass * f;
    for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i] += companions[i] * f;
  }
}

double ScaledAccumulator::log_mass() const { return max_ + std::log(mass_); }

void check_enum_cap(const SpinSystem& sys, const SolverOptions& opts) {
  if (sys.n > opts.enum_cap || sys.n > kHardSpinLimit) {
    throw SizeError("enumeration over " + std::to_string(sys.n) + " spins exceeds the cap of " +
                    std::to_string(std::min(opts.enum_cap, kHardSpinLimit)));
  }
}

double enum_log_partition(const SpinSystem& sys) {
  const BlockEnumerator en(sys.n);
  const BlockEnumerator::Compiled q(en, log_weight_form(sys));
  std::vector<double> logw(en.block_size()), w(en.block_size());
  ScaledAccumulator acc;
  for (std::uint64_t h = 0; h < en.block_count(); ++h) {
    q.evaluate(h, logw);
    const double shift = kernels::max(logw);
    kernels::exp_shift(w, logw, shift);
    acc.absorb(shift, kernels::sum(w), {});
  }
  return acc.log_mass();
}

std::vector<double> enum_correlations(const SpinSystem& sys, std::span<const TermRef> terms) {
  const BlockEnumerator en(sys.n);
  const int k = en.low_bits();
  const BlockEnumerator::Compiled q(en, log_weight_form(sys));

  // Each observable s_a s_b (or g s_a) splits into a low-bit sign array and
  // a high-bit sign that is constant over the block.
  struct Split {
    int low_a = -1, low_b = -1;
    int high_a = -1, high_b = -1;
    double factor = 1.0;
    std::vector<double> prod;
  };
  std::vector<Split> splits;
  for (const TermRef& t : terms) {
    Split s;
    auto place = [&](int site, int& low, int& high) {
      if (site < k) low = site;
      else high = site - k;
    };
    if (t.field) {
      const Field& f = sys.fields[t.index];
      s.factor = f.ghost;
      place(f.site, s.low_a, s.high_a);
    } else {
      const Bond& b = sys.bonds[t.index];
      place(b.a, s.low_a, s.high_a);
      int la = -1, ha = -1;
      place(b.b, la, ha);
      if (s.low_a >= 0 && la >= 0) {
        if (s.low_a == la) {
          s.low_a = -1;
        } else {
          s.prod.resize(en.block_size());
          kernels::mul_into(s.prod, en.low_sign(s.low_a), en.low_sign(la));
        }
      } else if (la >= 0) {
        s.low_a = la;
      }
      if (ha >= 0) {
        if (s.high_a < 0) s.high_a = ha;
        else if (s.high_a == ha) s.high_a = -1;
        else s.high_b = ha;
      }
    }
    splits.push_back(std::move(s));
  }

  std::vector<double> logw(en.block_size()), w(en.block_size()), comp(terms.size());
  ScaledAccumulator acc(terms.size());
  for (std::uint64_t h = 0; h < en.block_count(); ++h) {
    q.evaluate(h, logw);
    const double shift = kernels::max(logw);
    kernels::exp_shift(w, logw, shift);
    const double mass = kernels::sum(w);
    for (std::size_t i = 0; i < splits.size(); ++i) {
      const Split& s = splits[i];
      double v;
      if (!s.prod.empty()) v = kernels::dot(w, s.prod);
      else if (s.low_a >= 0) v = kernels::dot(w, en.low_sign(s.low_a));
      else v = mass;
      double sign = s.factor;
      if (s.high_a >= 0 && ((h >> s.high_a) & 1U)) sign = -sign;
      if (s.high_b >= 0 && ((h >> s.high_b) & 1U)) sign = -sign;
      comp[i] = sign * v;
    }
    acc.absorb(shift, mass, comp);
  }
  std::vector<double> out(terms.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(acc.ratio(i), -1.0, 1.0);
  return out;
}

std::vector<double> enum_expectations(const SpinSystem& sys, std::size_t count, const MultiObservable& fill) {
  const BlockEnumerator en(sys.n);
  const int k = en.low_bits();
  const BlockEnumerator::Compiled q(en, log_weight_form(sys));
  SpinConfig sigma = SpinConfig::uniform(sys.box, 1);
  std::vector<double> logw(en.block_size()), w(en.block_size()), comp(count), g(count);
  ScaledAccumulator acc(count);
  for (std::uint64_t h = 0; h < en.block_count(); ++h) {
    q.evaluate(h, logw);
    const double shift = kernels::max(logw);
    kernels::exp_shift(w, logw, shift);
    for (int i = k; i < sys.n; ++i) sigma.set(i, en.spin(i, h, 0));
    std::fill(comp.begin(), comp.end(), 0.0);
    for (std::uint64_t l = 0; l < en.block_size(); ++l) {
      for (int i = 0; i < k; ++i) sigma.set(i, en.spin(i, h, l));
      fill(sigma, g);
      for (std::size_t c = 0; c < count; ++c) comp[c] += g[c] * w[l];
    }
    acc.absorb(shift, kernels::sum(w), comp);
  }
  std::vector<double> out(count);
  for (std::size_t c = 0; c < count; ++c) out[c] = acc.ratio(c);
  return out;
}

}  // namespace eaglass::detail
