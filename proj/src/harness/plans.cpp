#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "eaglass/error.hpp"
#include "eaglass/fluctuation.hpp"
#include "plan.hpp"

namespace eaglass::harness::detail {

namespace {

// Bootstrap substreams for statistics computed only by the harness.
constexpr std::uint64_t kBootFIdentity = 100;

constexpr double kOracleLogZTol = 1e-9;
constexpr double kOracleCorrTol = 1e-10;
constexpr int kHistogramBins = 20;

SolverOptions solver_of(const ExperimentConfig& c) {
  SolverOptions o;
  if (c.method == "enumeration") o.method = SolverMethod::Enumeration;
  if (c.method == "transfer") o.method = SolverMethod::Transfer;
  o.enum_cap = c.enum_cap;
  o.transfer_cap = c.transfer_cap;
  return o;
}

SolverMethod method_from_string(const std::string& s) {
  for (auto m : {SolverMethod::Auto, SolverMethod::Enumeration, SolverMethod::Transfer}) {
    if (eaglass::to_string(m) == s) return m;
  }
  throw Error("unknown solver method '" + s + "' in records");
}

PairTemplate template_of(const ExperimentConfig& c) {
  PairTemplate t;
  t.bc = c.bc;
  t.bc_prime = c.bc_prime;
  t.beta = c.beta.front();
  t.dim = c.dim;
  t.margin = c.margin;
  return t;
}

EnsembleSpec spec_of(const ExperimentConfig& c, PairRule rule) {
  EnsembleSpec s;
  s.distribution = CouplingDistribution::parse(c.distribution);
  s.rule = std::move(rule);
  s.n = c.n;
  s.master_seed = *c.seed;
  s.solver = solver_of(c);
  s.bootstrap_resamples = c.bootstrap;
  s.workers = 1;
  return s;
}

std::vector<int> edge_sizes(const ExperimentConfig& c) { return c.sizes.empty() ? std::vector<int>{c.window} : c.sizes; }

std::string site_text(const Site& s, int dim) { return eaglass::to_string(s, dim); }

// ---------------------------------------------------------------------------
// Payload conversions.

json fe_json(const FreeEnergyResult& r) {
  return {{"value", r.value},
          {"log_z_gamma", r.log_z_gamma},
          {"log_z_gamma_cut", r.log_z_gamma_cut},
          {"log_z_gamma_prime", r.log_z_gamma_prime},
          {"log_z_gamma_prime_cut", r.log_z_gamma_prime_cut},
          {"solver", std::string(eaglass::to_string(r.solver))},
          {"beta", r.beta},
          {"bc_gamma", r.bc_gamma},
          {"bc_gamma_prime", r.bc_gamma_prime},
          {"margin", r.margin},
          {"seed", r.seed ? seed_json(*r.seed) : json(nullptr)}};
}

SeedSpec seed_from(const json& j) {
  return {j.at("master").get<std::uint64_t>(), j.at("realization").get<std::uint64_t>(),
          purpose_from_string(j.at("purpose").get<std::string>()), j.at("substream").get<std::uint64_t>()};
}

FreeEnergyResult fe_from(const json& j) {
  FreeEnergyResult r;
  r.value = j.at("value").get<double>();
  r.log_z_gamma = j.at("log_z_gamma").get<double>();
  r.log_z_gamma_cut = j.at("log_z_gamma_cut").get<double>();
  r.log_z_gamma_prime = j.at("log_z_gamma_prime").get<double>();
  r.log_z_gamma_prime_cut = j.at("log_z_gamma_prime_cut").get<double>();
  r.solver = method_from_string(j.at("solver").get<std::string>());
  r.beta = j.at("beta").get<double>();
  r.bc_gamma = j.at("bc_gamma").get<std::string>();
  r.bc_gamma_prime = j.at("bc_gamma_prime").get<std::string>();
  r.margin = j.at("margin").get<int>();
  if (!j.at("seed").is_null()) r.seed = seed_from(j.at("seed"));
  return r;
}

json variance_json(const VarianceReport& v) {
  return {{"estimate", v.estimate},
          {"std_error", v.std_error},
          {"n", v.n},
          {"resamples", v.resamples},
          {"bootstrap_seed", seed_json(v.bootstrap_seed)},
          {"components", v.components},
          {"component_std_error", v.component_std_error},
          {"flags", v.flags}};
}

json trace_json(const MartingaleTrace& t) {
  return {{"y", t.y}, {"y_std_error", t.y_std_error}, {"delta", t.delta}, {"delta_noise", t.delta_noise}, {"f", t.f}};
}

MartingaleTrace trace_from(const json& j) {
  MartingaleTrace t;
  t.y = j.at("y").get<std::vector<double>>();
  t.y_std_error = j.at("y_std_error").get<std::vector<double>>();
  t.delta = j.at("delta").get<std::vector<double>>();
  t.delta_noise = j.at("delta_noise").get<std::vector<double>>();
  t.f = j.at("f").get<double>();
  return t;
}

json block_json(const BlockRealization& b) {
  return {{"trace", trace_json(b.trace)},
          {"block_mean", b.block_mean},
          {"block_noise", b.block_noise},
          {"first_block", b.first_block}};
}

BlockRealization block_from(const json& j) {
  BlockRealization b;
  b.trace = trace_from(j.at("trace"));
  b.block_mean = j.at("block_mean").get<std::vector<double>>();
  b.block_noise = j.at("block_noise").get<std::vector<double>>();
  b.first_block = j.at("first_block").get<std::vector<double>>();
  return b;
}

json edge_martingale_json(const EdgeMartingale& m) {
  return {{"trace", trace_json(m.trace)},
          {"bound", m.bound},
          {"slack", m.slack},
          {"bound_holds", m.bound_holds},
          {"direct_end", m.direct_end},
          {"direct_start", m.direct_start},
          {"direct_std_error", m.direct_std_error},
          {"telescope_z", m.telescope_z}};
}

EdgeMartingale edge_martingale_from(const json& j, const EdgeSet& edges) {
  EdgeMartingale m;
  m.trace = trace_from(j.at("trace"));
  m.edges = edges;
  m.bound = j.at("bound").get<std::vector<double>>();
  m.slack = j.at("slack").get<std::vector<double>>();
  m.bound_holds = j.at("bound_holds").get<bool>();
  m.direct_end = j.at("direct_end").get<double>();
  m.direct_start = j.at("direct_start").get<double>();
  m.direct_std_error = j.at("direct_std_error").get<double>();
  m.telescope_z = j.at("telescope_z").get<double>();
  return m;
}

json identity_json(const VarianceIdentityReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"std_error", c.std_error}, {"pass", c.pass}});
  }
  return {{"n", r.n},
          {"var_x", r.var_x},
          {"var_x_std_error", r.var_x_std_error},
          {"expected_conditional_variance", r.expected_conditional_variance},
          {"expected_conditional_variance_std_error", r.expected_conditional_variance_std_error},
          {"variance_of_conditional_mean", r.variance_of_conditional_mean},
          {"variance_of_conditional_mean_std_error", r.variance_of_conditional_mean_std_error},
          {"symmetric_variance", r.symmetric_variance},
          {"symmetric_variance_std_error", r.symmetric_variance_std_error},
          {"checks", checks},
          {"pass", r.pass}};
}

json decomposition_json(const BlockDecomposition& d) {
  return {{"var_f", variance_json(d.var_f)},
          {"increments", variance_json(d.increments)},
          {"block_variance", variance_json(d.block_variance)},
          {"slack", d.slack},
          {"slack_std_error", d.slack_std_error},
          {"inequality_holds", d.inequality_holds},
          {"telescoping_exact", d.telescoping_exact},
          {"block_max_z", d.block_max_z},
          {"blocks_agree", d.blocks_agree}};
}

std::vector<double> doubles(const json& j, const char* key) { return j.at(key).get<std::vector<double>>(); }

// ---------------------------------------------------------------------------
// Plans.

Plan fe_plan(const ExperimentConfig& c) {
  const EnsembleSpec spec = spec_of(c, template_of(c).at(c.window));
  const std::size_t i = c.realization;
  Plan p;
  p.tasks = 1;
  p.seed_of = [=](std::size_t) { return spec.coupling_seed(i); };
  p.task = [=](std::size_t) {
    const StatePair pair = spec.rule.realize(spec.couplings(i));
    const auto r = interface_free_energy(pair, spec.solver);
    const auto g = free_energy_gradient(pair, spec.solver);
    json edges = json::array();
    for (const Edge& e : g.edges) edges.push_back(eaglass::to_string(e, pair.box().dim()));
    return json{{"result", fe_json(r)},
                {"gradient",
                 {{"edges", edges},
                  {"corr_gamma", g.corr_gamma},
                  {"corr_gamma_prime", g.corr_gamma_prime},
                  {"gradient", g.gradient}}}};
  };
  p.reduce = [=](const std::vector<json>& payloads) {
    const json& pl = payloads.at(0);
    const FreeEnergyResult r = fe_from(pl.at("result"));
    Reduction out;
    out.result = {{"realization", i}, {"free_energy", fe_json(r)}, {"gradient", pl.at("gradient")}};
    out.pass = std::isfinite(r.value);
    Csv fe({"realization", "value", "log_z_gamma", "log_z_gamma_cut", "log_z_gamma_prime", "log_z_gamma_prime_cut",
            "solver"});
    fe.row(i, r.value, r.log_z_gamma, r.log_z_gamma_cut, r.log_z_gamma_prime, r.log_z_gamma_prime_cut,
           std::string(eaglass::to_string(r.solver)));
    Csv grad({"edge", "corr_gamma", "corr_gamma_prime", "gradient"});
    const json& g = pl.at("gradient");
    for (std::size_t k = 0; k < g.at("edges").size(); ++k) {
      grad.row(g["edges"][k].get<std::string>(), g["corr_gamma"][k].get<double>(),
               g["corr_gamma_prime"][k].get<double>(), g["gradient"][k].get<double>());
    }
    out.files = {fe.file("fe.csv"), grad.file("fe_gradient.csv")};
    return out;
  };
  return p;
}

Plan domain_wall_plan(const ExperimentConfig& c) {
  const Region box = Region::open_box(c.extents);
  const auto dist = CouplingDistribution::parse(c.distribution);
  const double beta = c.beta.front();
  const SolverOptions opts = solver_of(c);
  const SeedSpec seed{*c.seed, c.realization, Purpose::Couplings, 0};
  Plan p;
  p.tasks = 1;
  p.seed_of = [=](std::size_t) { return seed; };
  p.task = [=](std::size_t) {
    const BoundaryCondition bcs[] = {BoundaryCondition::periodic(box.dim()),
                                     BoundaryCondition::antiperiodic(box.dim(), 0)};
    const CouplingConfig J = sample_couplings(dist, universe_edges(box, bcs), seed);
    return json{{"value", domain_wall_free_energy(J, box, beta, 0, opts)}};
  };
  p.reduce = [=](const std::vector<json>& payloads) {
    const double v = payloads.at(0).at("value").get<double>();
    Reduction out;
    out.result = {{"realization", c.realization}, {"seam_axis", 0}, {"beta", beta}, {"value", v}};
    out.pass = std::isfinite(v);
    Csv csv({"realization", "seam_axis", "beta", "value"});
    csv.row(static_cast<std::size_t>(c.realization), 0, beta, v);
    out.files = {csv.file("domain_wall.csv")};
    return out;
  };
  return p;
}

Plan ensemble_plan(const ExperimentConfig& c) {
  const EnsembleSpec spec = spec_of(c, template_of(c).at(c.window));
  Plan p;
  p.tasks = static_cast<std::size_t>(c.n);
  p.seed_of = [=](std::size_t i) { return spec.coupling_seed(i); };
  p.task = [=](std::size_t i) { return fe_json(interface_free_energy(spec.rule.realize(spec.couplings(i)), spec.solver)); };
  p.reduce = [=](const std::vector<json>& payloads) {
    std::vector<FreeEnergyResult> rs;
    for (const auto& pl : payloads) rs.push_back(fe_from(pl));
    const EnsembleResult e = summarize_ensemble(spec, rs);
    Reduction out;
    out.result = {{"pair", spec.rule.describe()},
                  {"variance", variance_json(e.variance)},
                  {"mean", e.mean},
                  {"mean_std_error", e.mean_std_error}};
    Csv var({"L", "n", "mean", "mean_std_error", "variance", "variance_std_error", "resamples", "flags"});
    std::string flags;
    for (const auto& f : e.variance.flags) flags += (flags.empty() ? "" : ";") + f;
    var.row(c.window, c.n, e.mean, e.mean_std_error, e.variance.estimate, e.variance.std_error, e.variance.resamples,
            flags);
    Csv fe({"realization", "value", "log_z_gamma", "log_z_gamma_cut", "log_z_gamma_prime", "log_z_gamma_prime_cut",
            "solver"});
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const auto& r = rs[i];
      fe.row(i, r.value, r.log_z_gamma, r.log_z_gamma_cut, r.log_z_gamma_prime, r.log_z_gamma_prime_cut,
             std::string(eaglass::to_string(r.solver)));
    }
    out.files = {var.file("variance.csv"), fe.file("fe.csv")};
    return out;
  };
  return p;
}

// Tasks: [0, n) main pair, [n, 2n) symmetric pair, 2n route comparison,
// 2n + 1 closed-form identity.
Plan martingale_plan(const ExperimentConfig& c) {
  const PairTemplate tmpl = template_of(c);
  const EnsembleSpec spec = spec_of(c, tmpl.at(c.window));
  PairTemplate sym_tmpl = tmpl;
  sym_tmpl.bc = c.symmetric_bc;
  sym_tmpl.bc_prime = c.symmetric_bc_prime;
  const EnsembleSpec sym = spec_of(c, sym_tmpl.at(c.window));
  const BlockConditioning cond{block_partition(spec.rule.window, c.block), c.n_outer};
  const std::size_t n = static_cast<std::size_t>(c.n);
  const auto dist = CouplingDistribution::parse(c.distribution);

  Plan p;
  p.tasks = 2 * n + 2;
  p.seed_of = [=](std::size_t t) {
    if (t < n) return spec.coupling_seed(t);
    if (t < 2 * n) return sym.coupling_seed(t - n);
    return spec.coupling_seed(0);
  };
  p.task = [=](std::size_t t) -> json {
    if (t < n) return block_json(block_realization(spec, cond, t));
    if (t < 2 * n) return block_json(block_realization(sym, cond, t - n));
    if (t == 2 * n) {
      const CouplingConfig J = spec.couplings(0);
      const Region& block = cond.partition.blocks.front();
      const auto d = conditional_mean_given_block(spec, J, block, c.n_outer, 0, ConditioningRoute::Direct);
      const auto r = conditional_mean_given_block(spec, J, block, c.n_outer, 0, ConditioningRoute::Reweighting);
      return {{"direct", {{"mean", d.mean}, {"std_error", d.std_error}}},
              {"reweighting", {{"mean", r.mean}, {"std_error", r.std_error}}}};
    }
    return identity_json(gaussian_sum_identity(dist, 1000, c.n_outer, *c.seed, c.bootstrap));
  };
  p.reduce = [=](const std::vector<json>& payloads) {
    std::vector<BlockRealization> main_runs, sym_runs;
    for (std::size_t t = 0; t < n; ++t) main_runs.push_back(block_from(payloads[t]));
    for (std::size_t t = n; t < 2 * n; ++t) sym_runs.push_back(block_from(payloads[t]));
    const BlockDecomposition d = summarize_block_decomposition(spec, main_runs);
    const BlockDecomposition s = summarize_block_decomposition(sym, sym_runs);
    const auto f_identity = variance_identity_checks({d.f_values, d.first_block_samples}, c.bootstrap,
                                                     SeedSpec{*c.seed, 0, Purpose::Bootstrap, kBootFIdentity});
    const json& routes = payloads[2 * n];
    const double dm = routes["direct"]["mean"].get<double>();
    const double rm = routes["reweighting"]["mean"].get<double>();
    const double se = std::hypot(routes["direct"]["std_error"].get<double>(),
                                 routes["reweighting"]["std_error"].get<double>());
    const bool routes_agree = se > 0.0 ? std::abs(dm - rm) <= 3.0 * se : std::abs(dm - rm) <= 1e-12;
    const json& gaussian = payloads[2 * n + 1];

    Reduction out;
    out.result = {{"pair", spec.rule.describe()},
                  {"blocks", cond.partition.blocks.size()},
                  {"decomposition", decomposition_json(d)},
                  {"f_identity", identity_json(f_identity)},
                  {"gaussian_identity", gaussian},
                  {"routes", {{"block", 0}, {"direct", routes["direct"]}, {"reweighting", routes["reweighting"]},
                              {"z", se > 0.0 ? (dm - rm) / se : 0.0}, {"agree", routes_agree}}},
                  {"symmetric_pair", {{"pair", sym.rule.describe()}, {"decomposition", decomposition_json(s)}}}};
    out.pass = d.inequality_holds && d.telescoping_exact && f_identity.pass && gaussian.at("pass").get<bool>() &&
               routes_agree && s.telescoping_exact && s.blocks_agree;

    Csv var({"L", "n", "n_outer", "var_f", "var_f_std_error", "sum_var_increments", "sum_var_increments_std_error",
             "slack", "slack_std_error", "inequality_holds", "telescoping_exact"});
    var.row(c.window, c.n, c.n_outer, d.var_f.estimate, d.var_f.std_error, d.increments.estimate,
            d.increments.std_error, d.slack, d.slack_std_error, d.inequality_holds, d.telescoping_exact);
    Csv mart({"pair", "k", "var_increment", "var_increment_std_error", "block_variance", "block_variance_std_error"});
    const auto rows = [&](const std::string& name, const BlockDecomposition& b) {
      for (std::size_t k = 0; k < b.increments.components.size(); ++k) {
        mart.row(name, k + 1, b.increments.components[k], b.increments.component_std_error[k],
                 b.block_variance.components[k], b.block_variance.component_std_error[k]);
      }
    };
    rows("main", d);
    rows("symmetric", s);
    out.files = {var.file("variance.csv"), mart.file("martingale.csv")};
    return out;
  };
  return p;
}

Plan edge_martingale_plan(const ExperimentConfig& c) {
  const PairTemplate tmpl = template_of(c);
  const std::vector<int> sizes = edge_sizes(c);
  std::vector<EnsembleSpec> specs;
  for (int L : sizes) specs.push_back(spec_of(c, tmpl.at(L)));
  const std::size_t n = static_cast<std::size_t>(c.n);
  Plan p;
  p.tasks = sizes.size() * n;
  p.seed_of = [=](std::size_t t) { return specs[t / n].coupling_seed(t % n); };
  p.task = [=](std::size_t t) { return edge_martingale_json(edge_martingale_trace(specs[t / n], t % n, c.n_outer)); };
  p.reduce = [=](const std::vector<json>& payloads) {
    Reduction out;
    json per_size = json::array();
    std::vector<LindebergRow> lrows;
    Csv csv({"L", "realization", "k", "edge", "delta", "delta_noise", "bound", "slack"});
    bool pass = true;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
      const EdgeSet edges = interior_edges(specs[s].rule.window);
      std::vector<EdgeMartingale> traces;
      for (std::size_t i = 0; i < n; ++i) traces.push_back(edge_martingale_from(payloads[s * n + i], edges));
      bool holds = true, telescopes = true;
      double min_slack = std::numeric_limits<double>::infinity(), max_z = 0.0;
      int violations = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& m = traces[i];
        holds = holds && m.bound_holds;
        telescopes = telescopes && m.trace.telescopes();
        max_z = std::max(max_z, std::abs(m.telescope_z));
        for (std::size_t k = 0; k < m.slack.size(); ++k) {
          min_slack = std::min(min_slack, m.slack[k]);
          if (m.slack[k] < 0.0) ++violations;
          csv.row(sizes[s], i, k + 1, eaglass::to_string(edges.edges()[k], c.dim), m.trace.delta[k], m.trace.delta_noise[k],
                  m.bound[k], m.slack[k]);
        }
      }
      pass = pass && holds && telescopes;
      per_size.push_back({{"L", sizes[s]},
                          {"pair", specs[s].rule.describe()},
                          {"n", n},
                          {"edges", edges.size()},
                          {"bound_holds", holds},
                          {"violations", violations},
                          {"min_slack", edges.size() ? min_slack : 0.0},
                          {"telescopes", telescopes},
                          {"max_abs_telescope_z", max_z}});
      if (sizes.size() >= 2) lrows.push_back(summarize_lindeberg_size(specs[s], traces, c.delta, s));
    }
    out.result = {{"n_outer", c.n_outer},
                  {"nu_abs", CouplingDistribution::parse(c.distribution).abs_moment()},
                  {"sizes", per_size}};
    out.files = {csv.file("edge_martingale.csv")};
    if (!lrows.empty()) {
      const LindebergReport l = lindeberg_from_rows(c.delta, std::move(lrows));
      json rows = json::array();
      Csv lc({"L", "edges", "tail", "tail_std_error", "h1_mean", "h1_dispersion", "h1_std_error"});
      for (const auto& r : l.rows) {
        rows.push_back({{"L", r.L},
                        {"edges", r.edges},
                        {"tail", r.tail},
                        {"tail_std_error", r.tail_std_error},
                        {"h1_mean", r.h1_mean},
                        {"h1_dispersion", r.h1_dispersion},
                        {"h1_std_error", r.h1_std_error}});
        lc.row(r.L, r.edges, r.tail, r.tail_std_error, r.h1_mean, r.h1_dispersion, r.h1_std_error);
      }
      out.result["lindeberg"] = {{"delta", l.delta}, {"rows", rows}, {"tail_decreasing", l.tail_decreasing}};
      out.files.push_back(lc.file("lindeberg.csv"));
    }
    out.pass = pass;
    return out;
  };
  return p;
}

void histogram(Csv& csv, double beta, const std::string& quantity, const std::vector<double>& v) {
  if (v.empty()) return;
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it, hi = *hi_it;
  const int bins = hi > lo ? kHistogramBins : 1;
  std::vector<std::size_t> count(static_cast<std::size_t>(bins), 0);
  for (double x : v) {
    int b = hi > lo ? static_cast<int>((x - lo) / (hi - lo) * bins) : 0;
    count[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))]++;
  }
  for (int b = 0; b < bins; ++b) {
    const double a = lo + (hi - lo) * b / bins;
    const double z = b + 1 == bins ? hi : lo + (hi - lo) * (b + 1) / bins;
    csv.row(beta, quantity, a, z, count[static_cast<std::size_t>(b)]);
  }
}

// Task t: beta index t / n, realization t % n; every beta sees the same couplings.
Plan bounds_plan(const ExperimentConfig& c) {
  const EnsembleSpec spec = spec_of(c, template_of(c).at(c.window));
  const std::size_t n = static_cast<std::size_t>(c.n);
  Plan p;
  p.tasks = c.beta.size() * n;
  p.seed_of = [=](std::size_t t) { return spec.coupling_seed(t % n); };
  p.task = [=](std::size_t t) {
    PairRule rule = spec.rule;
    rule.beta = c.beta[t / n];
    const StatePair pair = rule.realize(spec.couplings(t % n));
    const auto r = interface_free_energy(pair, spec.solver);
    const BoundCheck b = bound_check(pair, r, spec.solver, false);
    json ratios = json::array();
    for (const auto& q : b.ratios) {
      ratios.push_back({{"observable", q.observable}, {"prime", q.prime}, {"log_ratio", q.log_ratio}, {"slack", q.slack}});
    }
    return json{{"f", b.f},
                {"boundary_abs_sum", b.boundary_abs_sum},
                {"bound_f", b.bound_f},
                {"slack_f", b.slack_f},
                {"log_ratio_bound", b.log_ratio_bound},
                {"ratios", ratios},
                {"min_ratio_slack", b.min_ratio_slack},
                {"holds", b.holds()}};
  };
  p.reduce = [=](const std::vector<json>& payloads) {
    Reduction out;
    Csv csv({"beta", "realization", "f", "boundary_abs_sum", "bound_f", "slack_f", "min_ratio_slack", "holds"});
    Csv hist({"beta", "quantity", "bin_lo", "bin_hi", "count"});
    json per_beta = json::array();
    int total_violations = 0;
    for (std::size_t b = 0; b < c.beta.size(); ++b) {
      std::vector<double> slack_f, ratio;
      int violations = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const json& pl = payloads[b * n + i];
        const bool holds = pl.at("holds").get<bool>();
        if (!holds) ++violations;
        slack_f.push_back(pl.at("slack_f").get<double>());
        ratio.push_back(pl.at("min_ratio_slack").get<double>());
        csv.row(c.beta[b], i, pl.at("f").get<double>(), pl.at("boundary_abs_sum").get<double>(),
                pl.at("bound_f").get<double>(), slack_f.back(), ratio.back(), holds);
      }
      histogram(hist, c.beta[b], "slack_f", slack_f);
      histogram(hist, c.beta[b], "min_ratio_slack", ratio);
      total_violations += violations;
      per_beta.push_back({{"beta", c.beta[b]},
                          {"instances", n},
                          {"violations", violations},
                          {"min_slack_f", *std::min_element(slack_f.begin(), slack_f.end())},
                          {"min_ratio_slack", *std::min_element(ratio.begin(), ratio.end())}});
    }
    out.result = {{"pair", spec.rule.describe()}, {"tolerance", 1e-9}, {"violations", total_violations},
                  {"betas", per_beta}};
    out.pass = total_violations == 0;
    out.files = {csv.file("bounds.csv"), hist.file("bounds_hist.csv")};
    return out;
  };
  return p;
}

Plan mgf_plan(const ExperimentConfig& c) {
  const EnsembleSpec spec = spec_of(c, template_of(c).at(c.window));
  Plan p;
  p.tasks = static_cast<std::size_t>(c.n);
  p.seed_of = [=](std::size_t i) { return spec.coupling_seed(i); };
  p.task = [=](std::size_t i) { return json{{"conditional_mean", mgf_realization(spec, i, c.n_outer)}}; };
  p.reduce = [=](const std::vector<json>& payloads) {
    std::vector<double> means;
    for (const auto& pl : payloads) means.push_back(pl.at("conditional_mean").get<double>());
    const MgfReport m = summarize_mgf(spec, c.t, c.n_outer, means);
    Reduction out;
    json rows = json::array();
    Csv csv({"t", "empirical", "std_error", "bound", "pass"});
    for (const auto& r : m.rows) {
      rows.push_back({{"t", r.t}, {"empirical", r.empirical}, {"std_error", r.std_error}, {"bound", r.bound},
                      {"pass", r.pass}});
      csv.row(r.t, r.empirical, r.std_error, r.bound, r.pass);
    }
    out.result = {{"pair", spec.rule.describe()},
                  {"n", m.n},
                  {"n_outer", m.n_outer},
                  {"boundary_edges", m.boundary_edges},
                  {"bound", "exp(4 beta t nu(|J|))"},
                  {"nu_abs", spec.distribution.abs_moment()},
                  {"rows", rows}};
    out.pass = m.pass;
    out.files = {csv.file("mgf.csv")};
    return out;
  };
  return p;
}

Plan probe_plan(const ExperimentConfig& c) {
  const EnsembleSpec spec = spec_of(c, template_of(c).at(c.window));
  Plan p;
  p.tasks = static_cast<std::size_t>(c.n);
  p.seed_of = [=](std::size_t i) { return spec.coupling_seed(i); };
  p.task = [=](std::size_t i) { return json{{"delta", probe_realization(spec, i)}}; };
  p.reduce = [=](const std::vector<json>& payloads) {
    std::vector<std::vector<double>> deltas;
    for (const auto& pl : payloads) deltas.push_back(doubles(pl, "delta"));
    const IncongruenceReport r = summarize_probe(spec, c.epsilon, deltas);
    Reduction out;
    json rows = json::array();
    Csv csv({"epsilon", "density", "std_error", "ci_lo", "ci_hi", "positive"});
    bool all_zero = true, any_positive = false;
    for (const auto& row : r.rows) {
      const bool positive = row.ci_lo > 0.0;
      all_zero = all_zero && row.density == 0.0;
      any_positive = any_positive || positive;
      rows.push_back({{"epsilon", row.epsilon}, {"density", row.density}, {"std_error", row.std_error},
                      {"ci_lo", row.ci_lo}, {"ci_hi", row.ci_hi}, {"positive", positive}});
      csv.row(row.epsilon, row.density, row.std_error, row.ci_lo, row.ci_hi, positive);
    }
    Csv edges({"edge", "mean", "std_error"});
    for (std::size_t k = 0; k < r.edges.size(); ++k) {
      edges.row(eaglass::to_string(r.edges.edges()[k], c.dim), r.edge_mean[k], r.edge_std_error[k]);
    }
    const bool identical = spec.rule.identical();
    out.result = {{"pair", spec.rule.describe()},
                  {"identical_pair", identical},
                  {"n", r.n},
                  {"edges", r.edges.size()},
                  {"rows", rows},
                  {"nonzero_mass", r.nonzero_mass},
                  {"nonzero_tol", r.nonzero_tol}};
    out.pass = identical ? all_zero && r.nonzero_mass == 0.0 : any_positive;
    out.files = {csv.file("probe.csv"), edges.file("probe_edges.csv")};
    return out;
  };
  return p;
}

// Task t: size index t / n, realization t % n.
Plan scaling_plan(const ExperimentConfig& c) {
  const PairTemplate tmpl = template_of(c);
  std::vector<EnsembleSpec> specs;
  std::vector<PairRule> rules;
  for (int L : c.sizes) {
    specs.push_back(spec_of(c, tmpl.at(L)));
    rules.push_back(specs.back().rule);
  }
  const EnsembleSpec base = specs.front();
  const std::size_t n = static_cast<std::size_t>(c.n);
  Plan p;
  p.tasks = c.sizes.size() * n;
  p.seed_of = [=](std::size_t t) { return specs[t / n].coupling_seed(t % n); };
  p.task = [=](std::size_t t) {
    const EnsembleSpec& s = specs[t / n];
    return fe_json(interface_free_energy(s.rule.realize(s.couplings(t % n)), s.solver));
  };
  p.reduce = [=](const std::vector<json>& payloads) {
    std::vector<std::vector<double>> values(c.sizes.size());
    for (std::size_t t = 0; t < payloads.size(); ++t) values[t / n].push_back(fe_from(payloads[t]).value);
    const ScalingReport r = summarize_scaling(base, rules, c.sizes, values);
    Reduction out;
    json rows = json::array(), fits = json::array();
    Csv csv({"L", "window_sites", "boundary_edges", "log_window_sites", "log_boundary_edges", "variance", "std_error",
             "log_variance"});
    for (const auto& row : r.rows) {
      rows.push_back({{"L", row.L}, {"window_sites", row.window_sites}, {"boundary_edges", row.boundary_edges},
                      {"variance", row.variance}, {"std_error", row.std_error}});
      csv.row(row.L, row.window_sites, row.boundary_edges, std::log(static_cast<double>(row.window_sites)),
              std::log(static_cast<double>(row.boundary_edges)), row.variance, row.std_error,
              row.variance > 0.0 ? std::log(row.variance) : -std::numeric_limits<double>::infinity());
    }
    for (const auto& f : r.fits) {
      fits.push_back({{"against", f.against}, {"exponent", f.exponent}, {"intercept", f.intercept},
                      {"ci_lo", f.ci_lo}, {"ci_hi", f.ci_hi}});
      csv.footer("# fit against=" + f.against + " exponent=" + number(f.exponent) + " intercept=" +
                 number(f.intercept) + " ci_lo=" + number(f.ci_lo) + " ci_hi=" + number(f.ci_hi));
    }
    csv.footer("# note: " + r.note);
    out.result = {{"pair_template", {{"bc", c.bc}, {"bc_prime", c.bc_prime}, {"margin", c.margin}}},
                  {"n", c.n},
                  {"rows", rows},
                  {"fits", fits},
                  {"degenerate", r.degenerate},
                  {"note", r.note}};
    out.pass = true;
    out.files = {csv.file("scaling.csv")};
    return out;
  };
  return p;
}

Plan covariance_plan(const ExperimentConfig& c) {
  const Region torus = Region::torus(c.extents);
  const auto dist = CouplingDistribution::parse(c.distribution);
  const double beta = c.beta.front();
  const SolverOptions opts = solver_of(c);
  const std::uint64_t master = *c.seed;
  Plan p;
  p.tasks = static_cast<std::size_t>(c.n);
  p.seed_of = [=](std::size_t i) { return SeedSpec{master, i, Purpose::Couplings, 0}; };
  p.task = [=](std::size_t i) {
    const CovarianceSample s = covariance_sample(torus, dist, beta, master, i, c.block, opts);
    std::vector<int> shift(s.shift.begin(), s.shift.begin() + c.dim);
    return json{{"shift", shift},
                {"translation_deviation", s.translation_deviation},
                {"coupling_deviation", s.coupling_deviation}};
  };
  p.reduce = [=](const std::vector<json>& payloads) {
    std::vector<CovarianceSample> samples;
    Csv csv({"sample", "shift", "translation_deviation", "coupling_deviation"});
    for (std::size_t i = 0; i < payloads.size(); ++i) {
      CovarianceSample s;
      const auto shift = payloads[i].at("shift").get<std::vector<int>>();
      std::copy(shift.begin(), shift.end(), s.shift.begin());
      s.translation_deviation = payloads[i].at("translation_deviation").get<double>();
      s.coupling_deviation = payloads[i].at("coupling_deviation").get<double>();
      samples.push_back(s);
      csv.row(i, site_text(s.shift, c.dim), s.translation_deviation, s.coupling_deviation);
    }
    const CovarianceReport r = summarize_covariance(samples);
    Reduction out;
    out.result = {{"torus", c.extents},
                  {"samples", r.samples},
                  {"max_translation_deviation", r.max_translation_deviation},
                  {"max_coupling_deviation", r.max_coupling_deviation},
                  {"tolerance", 1e-10}};
    out.pass = r.pass;
    out.files = {csv.file("covariance.csv")};
    return out;
  };
  return p;
}

// Task t: bc index t / (betas n), beta index (t / n) % betas, instance t % n.
Plan oracle_plan(const ExperimentConfig& c) {
  const Region box = Region::open_box(c.extents);
  const auto dist = CouplingDistribution::parse(c.distribution);
  const std::size_t n = static_cast<std::size_t>(c.n);
  const std::size_t nb = c.beta.size();
  const std::uint64_t master = *c.seed;
  const SolverOptions base = solver_of(c);
  Plan p;
  p.tasks = c.oracle_bcs.size() * nb * n;
  p.seed_of = [=](std::size_t t) { return SeedSpec{master, t, Purpose::Couplings, 0}; };
  p.task = [=](std::size_t t) -> json {
    const BoundaryCondition bc = BoundaryCondition::parse(c.oracle_bcs[t / (nb * n)], box);
    const double beta = c.beta[(t / n) % nb];
    const CouplingConfig J = sample_couplings(dist, system_edges(box, bc), SeedSpec{master, t, Purpose::Couplings, 0});
    const GibbsSpec g(box, J, beta, bc);
    SolverOptions en = base, tr = base;
    en.method = SolverMethod::Enumeration;
    tr.method = SolverMethod::Transfer;
    try {
      const double a = log_partition_enum(g, en);
      const double b = log_partition_transfer(g, tr);
      const auto& edges = g.edges().edges();
      const auto ca = edge_correlations(g, edges, en);
      const auto cb = edge_correlations(g, edges, tr);
      double dev = 0.0;
      for (std::size_t k = 0; k < ca.size(); ++k) dev = std::max(dev, std::abs(ca[k] - cb[k]));
      return {{"status", "ok"}, {"log_z_enum", a}, {"log_z_transfer", b}, {"dlogz", std::abs(a - b)},
              {"max_corr_dev", dev}};
    } catch (const UnsupportedError& e) {
      return {{"status", "unsupported"}, {"reason", e.what()}};
    } catch (const SizeError& e) {
      return {{"status", "unsupported"}, {"reason", e.what()}};
    }
  };
  p.reduce = [=](const std::vector<json>& payloads) {
    Reduction out;
    Csv csv({"bc", "beta", "instances", "max_dlogz", "max_corr_dev", "pass"});
    json groups = json::array();
    bool pass = true;
    std::string unsupported;
    for (std::size_t g = 0; g < c.oracle_bcs.size() * nb; ++g) {
      const std::string& bc = c.oracle_bcs[g / nb];
      const double beta = c.beta[g % nb];
      double dz = 0.0, dc = 0.0;
      bool ok = true;
      for (std::size_t i = 0; i < n; ++i) {
        const json& pl = payloads[g * n + i];
        if (pl.at("status") != "ok") {
          if (unsupported.empty()) unsupported = bc + ": " + pl.at("reason").get<std::string>();
          ok = false;
          continue;
        }
        dz = std::max(dz, pl.at("dlogz").get<double>());
        dc = std::max(dc, pl.at("max_corr_dev").get<double>());
      }
      const bool group_pass = ok && dz <= kOracleLogZTol && dc <= kOracleCorrTol;
      pass = pass && group_pass;
      groups.push_back({{"bc", bc}, {"beta", beta}, {"instances", n}, {"max_dlogz", dz}, {"max_corr_dev", dc},
                        {"supported", ok}, {"pass", group_pass}});
      csv.row(bc, beta, n, dz, dc, group_pass);
    }
    out.result = {{"box", c.extents},
                  {"log_z_tolerance", kOracleLogZTol},
                  {"correlation_tolerance", kOracleCorrTol},
                  {"groups", groups}};
    if (!unsupported.empty()) {
      out.status = "unsupported";
      out.result["reason"] = unsupported;
    }
    out.pass = pass;
    out.files = {csv.file("oracle.csv")};
    return out;
  };
  return p;
}

}  // namespace

json seed_json(const SeedSpec& s) {
  return {{"master", s.master},
          {"realization", s.realization},
          {"purpose", std::string(eaglass::to_string(s.purpose))},
          {"substream", s.substream}};
}

std::string number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

Csv::Csv(std::vector<std::string> columns) : width_(columns.size()) { add(std::move(columns)); }

std::string Csv::cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

void Csv::add(std::vector<std::string> cells) {
  if (cells.size() != width_) throw Error("csv row width mismatch");
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) text_ += ',';
    text_ += cells[k];
  }
  text_ += '\n';
}

Csv& Csv::footer(const std::string& line) {
  text_ += line + '\n';
  return *this;
}

CsvFile Csv::file(std::string name) const { return {std::move(name), text_}; }

Plan make_plan(const ExperimentConfig& c) {
  switch (c.kind) {
    case Kind::Fe: return fe_plan(c);
    case Kind::DomainWall: return domain_wall_plan(c);
    case Kind::Ensemble: return ensemble_plan(c);
    case Kind::Martingale: return martingale_plan(c);
    case Kind::EdgeMartingale: return edge_martingale_plan(c);
    case Kind::Bounds: return bounds_plan(c);
    case Kind::Mgf: return mgf_plan(c);
    case Kind::Probe: return probe_plan(c);
    case Kind::Scaling: return scaling_plan(c);
    case Kind::Covariance: return covariance_plan(c);
    case Kind::OracleVerify: return oracle_plan(c);
  }
  throw ConfigError("unknown experiment kind");
}

}  // namespace eaglass::harness::detail

namespace eaglass::harness {

std::size_t task_count(const ExperimentConfig& config) {
  config.validate();
  return detail::make_plan(config).tasks;
}

}  // namespace eaglass::harness
