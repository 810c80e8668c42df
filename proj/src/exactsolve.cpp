#include <algorithm>
#include <cmath>
#include <tuple>

#include "eaglass/error.hpp"
#include "eaglass/exactsolve.hpp"
#include "eaglass/kernels.hpp"
#include "spin_system.hpp"

namespace eaglass {

using detail::SpinSystem;
using detail::TermRef;

double log_partition_enum(const GibbsSpec& spec, const SolverOptions& opts) {
  const SpinSystem sys = detail::compile(spec);
  detail::check_enum_cap(sys, opts);
  return detail::enum_log_partition(sys);
}

double log_partition_transfer(const GibbsSpec& spec, const SolverOptions& opts) {
  return detail::transfer_log_partition(detail::compile(spec), opts.transfer_cap);
}

SolverMethod resolve_method(const GibbsSpec& spec, const SolverOptions& opts) {
  const SpinSystem sys = detail::compile(spec);
  switch (opts.method) {
    case SolverMethod::Enumeration:
      detail::check_enum_cap(sys, opts);
      return SolverMethod::Enumeration;
    case SolverMethod::Transfer:
      detail::check_transfer_eligible(sys, opts.transfer_cap);
      return SolverMethod::Transfer;
    case SolverMethod::Auto:
      break;
  }
  try {
    detail::check_transfer_eligible(sys, opts.transfer_cap);
    return SolverMethod::Transfer;
  } catch (const UnsupportedError&) {
  }
  detail::check_enum_cap(sys, opts);
  return SolverMethod::Enumeration;
}

double log_partition(const GibbsSpec& spec, const SolverOptions& opts) {
  return resolve_method(spec, opts) == SolverMethod::Transfer ? log_partition_transfer(spec, opts)
                                                              : log_partition_enum(spec, opts);
}

double edge_correlation_enum(const GibbsSpec& spec, const Edge& e, const SolverOptions& opts) {
  const Edge edges[] = {e};
  SolverOptions o = opts;
  o.method = SolverMethod::Enumeration;
  return edge_correlations(spec, edges, o)[0];
}

double edge_correlation_transfer(const GibbsSpec& spec, const Edge& e, const SolverOptions& opts) {
  SpinSystem sys = detail::compile(spec);
  const TermRef t = detail::ensure_term(sys, e);
  const double plus = detail::transfer_log_partition(sys, opts.transfer_cap, detail::Constraint{t, 1});
  const double minus = detail::transfer_log_partition(sys, opts.transfer_cap, detail::Constraint{t, -1});
  if (std::isinf(plus) && std::isinf(minus)) throw Error("degenerate constrained partition functions");
  if (std::isinf(minus)) return 1.0;
  if (std::isinf(plus)) return -1.0;
  return std::tanh(0.5 * (plus - minus));
}

double edge_correlation(const GibbsSpec& spec, const Edge& e, const SolverOptions& opts) {
  const Edge edges[] = {e};
  return edge_correlations(spec, edges, opts)[0];
}

std::vector<double> edge_correlations(const GibbsSpec& spec, std::span<const Edge> edges,
                                      const SolverOptions& opts) {
  if (resolve_method(spec, opts) == SolverMethod::Transfer) {
    std::vector<double> out;
    out.reserve(edges.size());
    for (const Edge& e : edges) out.push_back(edge_correlation_transfer(spec, e, opts));
    return out;
  }
  SpinSystem sys = detail::compile(spec);
  detail::check_enum_cap(sys, opts);
  std::vector<TermRef> terms;
  terms.reserve(edges.size());
  for (const Edge& e : edges) terms.push_back(detail::ensure_term(sys, e));
  return detail::enum_correlations(sys, terms);
}

double site_magnetization(const GibbsSpec& spec, const Site& x, const SolverOptions& opts) {
  SpinSystem sys = detail::compile(spec);
  const TermRef t = detail::add_site_term(sys, x);
  if (resolve_method(spec, opts) == SolverMethod::Transfer) {
    const double plus = detail::transfer_log_partition(sys, opts.transfer_cap, detail::Constraint{t, 1});
    const double minus = detail::transfer_log_partition(sys, opts.transfer_cap, detail::Constraint{t, -1});
    return std::tanh(0.5 * (plus - minus));
  }
  const TermRef terms[] = {t};
  return detail::enum_correlations(sys, terms)[0];
}

double gibbs_expectation_enum(const GibbsSpec& spec, const Observable& f, const SolverOptions& opts) {
  const SpinSystem sys = detail::compile(spec);
  detail::check_enum_cap(sys, opts);
  return detail::enum_expectations(sys, 1, [&](const SpinConfig& s, std::span<double> g) { g[0] = f(s); })[0];
}

double log_expectation_exp_energy_enum(const GibbsSpec& spec, const EdgeSet& edges, double scale,
                                       const SolverOptions& opts) {
  const SpinSystem base = detail::compile(spec);
  detail::check_enum_cap(base, opts);

  // Observable terms on a scratch copy so virtual zero bonds stay out of the
  // weight; each carries the coupling exactly as it enters the weight.
  SpinSystem scratch = base;
  detail::QuadraticForm obs;
  for (const Edge& e : edges) {
    const TermRef t = detail::ensure_term(scratch, e);
    const double j = spec.couplings().at(e) * detail::seam_sign(spec, e);
    if (t.field) {
      const auto& f = scratch.fields[t.index];
      obs.fields.push_back({f.site, scale * j * f.ghost});
    } else {
      const auto& b = scratch.bonds[t.index];
      obs.pairs.push_back({b.a, b.b, scale * j});
    }
  }
  // scale * H_edges = -scale * sum J s s; flip the sign into the form.
  for (auto& p : obs.pairs) p.c = -p.c;
  for (auto& f : obs.fields) f.c = -f.c;

  const detail::BlockEnumerator en(base.n);
  const detail::BlockEnumerator::Compiled qw(en, detail::log_weight_form(base));
  const detail::BlockEnumerator::Compiled qo(en, obs);
  std::vector<double> logw(en.block_size()), logo(en.block_size()), w(en.block_size()), wo(en.block_size());
  detail::ScaledAccumulator acc(1);
  for (std::uint64_t h = 0; h < en.block_count(); ++h) {
    qw.evaluate(h, logw);
    qo.evaluate(h, logo);
    const double shift = kernels::max(logw);
    kernels::exp_shift(w, logw, shift);
    kernels::exp_shift(wo, logo, 0.0);
    kernels::multiply(wo, w);
    const double comp = kernels::sum(wo);
    acc.absorb(shift, kernels::sum(w), {&comp, 1});
  }
  return std::log(acc.ratio(0));
}

namespace {

EdgeSet checked_block_edges(const GibbsSpec& spec, const Region& block, const EdgeValues& values) {
  for (const Site& s : block.sites()) {
    if (!spec.box().contains(s)) throw ContainmentError("block site " + to_string(s, block.dim()) + " outside the box");
  }
  const EdgeSet be = interior_edges(block);
  for (const Edge& e : be) {
    if (!spec.edges().contains(e)) {
      throw ContainmentError("block edge " + to_string(e, block.dim()) + " carries no weight in the spec");
    }
  }
  for (const auto& [e, v] : values) {
    if (!be.contains(e)) throw ContainmentError("coupling given for edge outside the block");
  }
  return be;
}

}  // namespace

GibbsSpec reweight(const GibbsSpec& spec, const Region& block, const EdgeValues& block_couplings) {
  checked_block_edges(spec, block, block_couplings);
  EdgeValues sum;
  for (const auto& [e, v] : block_couplings) sum[e] = spec.couplings().at(e) + v;
  return spec.with_couplings(spec.couplings().with_values(sum));
}

double reweighting_formula_expectation(const GibbsSpec& spec, const Region& block,
                                       const EdgeValues& block_couplings, const Observable& f,
                                       const SolverOptions& opts) {
  checked_block_edges(spec, block, block_couplings);
  const SpinSystem sys = detail::compile(spec);
  detail::check_enum_cap(sys, opts);
  struct Term {
    std::size_t a, b;
    double c;
  };
  std::vector<Term> terms;
  for (const auto& [e, v] : block_couplings) {
    terms.push_back({static_cast<std::size_t>(spec.box().index_of(e.x)),
                     static_cast<std::size_t>(spec.box().index_of(e.y)),
                     spec.beta() * v * detail::seam_sign(spec, e)});
  }
  std::sort(terms.begin(), terms.end(), [](const Term& l, const Term& r) {
    return std::tie(l.a, l.b, l.c) < std::tie(r.a, r.b, r.c);
  });
  // g0 = f exp(-beta H_B), g1 = exp(-beta H_B)
  const auto both = detail::enum_expectations(sys, 2, [&](const SpinConfig& s, std::span<double> g) {
    double x = 0.0;
    for (const Term& t : terms) x += t.c * s.at(t.a) * s.at(t.b);
    const double e = std::exp(x);
    g[0] = f(s) * e;
    g[1] = e;
  });
  return both[0] / both[1];
}

}  // namespace eaglass
