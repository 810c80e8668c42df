// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes. Usage: acceptance [output-dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>

#include "eaglass/error.hpp"
#include "eaglass/fluctuation.hpp"
#include "eaglass/harness.hpp"
#include "oracle/brute.hpp"

using namespace eaglass;
using harness::ExperimentConfig;
using harness::json;
using harness::Kind;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20240611;

fs::path g_out = "acceptance-out";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentConfig config(Kind kind, const std::string& name) {
  ExperimentConfig c;
  c.kind = kind;
  c.id = name;
  c.seed = kSeed;
  c.output = (g_out / name).string();
  return c;
}

json run_report(const ExperimentConfig& c, int workers = 0) { return harness::run(c, {.workers = workers}).report; }

StatePair pair_of(const std::string& bc, const std::string& bc_prime, double beta, std::uint64_t seed, int L = 3) {
  PairTemplate t;
  t.bc = bc;
  t.bc_prime = bc_prime;
  t.beta = beta;
  const PairRule rule = t.at(L);
  return rule.realize(sample_couplings(CouplingDistribution::gaussian(0, 1), rule.universe(), SeedSpec{seed}));
}

std::map<std::string, std::string> files_of(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    out[e.path().filename().string()] = s.str();
  }
  return out;
}

// 1. Enumeration vs transfer matrix, plus the brute-force oracle on log Z.
Outcome oracle_equivalence() {
  auto c = config(Kind::OracleVerify, "oracle");
  c.extents = {3, 3};
  c.beta = {0.5, 1.0, 2.0};
  c.n = 50;
  c.oracle_bcs = {"free", "periodic", "antiperiodic", "fixed+", "fixed-", "free/periodic", "periodic/antiperiodic"};
  const auto t0 = std::chrono::steady_clock::now();
  const json r = run_report(c);
  const double elapsed = seconds_since(t0);
  double dz = 0.0, dc = 0.0;
  for (const auto& g : r["result"]["groups"]) {
    dz = std::max(dz, g["max_dlogz"].get<double>());
    dc = std::max(dc, g["max_corr_dev"].get<double>());
  }
  // Same instances, rebuilt from their seeds.
  const Region box = Region::open_box(c.extents);
  const auto dist = CouplingDistribution::parse(c.distribution);
  const std::size_t n = static_cast<std::size_t>(c.n), nb = c.beta.size();
  double brute = 0.0;
  for (std::size_t t = 0; t < c.oracle_bcs.size() * nb * n; ++t) {
    const auto bc = BoundaryCondition::parse(c.oracle_bcs[t / (nb * n)], box);
    const auto J = sample_couplings(dist, system_edges(box, bc), SeedSpec{kSeed, t, Purpose::Couplings, 0});
    const GibbsSpec g(box, J, c.beta[(t / n) % nb], bc);
    brute = std::max(brute, std::abs(log_partition_enum(g) - oracle::log_partition(g)));
  }
  const bool pass = r["pass"] == true && r["status"] == "ok" && brute <= 1e-9 && elapsed <= 120.0;
  return {pass, fmt("%zu instances; max|dlogZ| %.2e, max corr dev %.2e, max|enum - brute| %.2e; %.1f s (budget 120 s)",
                    c.oracle_bcs.size() * nb * n, dz, dc, brute, elapsed)};
}

// 2. Closed forms.
Outcome analytic_identities() {
  const auto dist = CouplingDistribution::gaussian(0, 1);
  double tanh_dev = 0.0;
  const Region two = Region::open_box({2});
  const Edge e{Site{0}, Site{1}, 0};
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto J = sample_couplings(dist, interior_edges(two), SeedSpec{kSeed, s, Purpose::Couplings, 0});
    for (double beta : {0.5, 1.0, 2.0}) {
      const GibbsSpec g(two, J, beta, BoundaryCondition::free(1));
      const double expect = std::tanh(beta * J.at(e));
      tanh_dev = std::max({tanh_dev, std::abs(edge_correlation_enum(g, e) - expect),
                           std::abs(edge_correlation_transfer(g, e) - expect)});
    }
  }

  bool logz_exact = true;
  int logz_cases = 0;
  for (const auto& ext : {std::vector<int>{3, 3}, std::vector<int>{3, 4}, std::vector<int>{5}}) {
    const Region box = Region::open_box(ext);
    for (const char* text : {"free", "periodic", "antiperiodic", "fixed+", "fixed-"}) {
      const auto bc = BoundaryCondition::parse(text, box);
      const auto J = sample_couplings(dist, system_edges(box, bc), SeedSpec{kSeed, 7, Purpose::Couplings, 0});
      const GibbsSpec g(box, J, 0.0, bc);
      const double expect = static_cast<double>(box.site_count()) * std::numbers::ln2;
      logz_exact = logz_exact && log_partition_enum(g) == expect && log_partition_transfer(g) == expect;
      ++logz_cases;
    }
  }

  double f_dev = 0.0;
  int f_cases = 0;
  for (const auto& [a, b] : {std::pair{"free", "periodic"}, std::pair{"free", "fixed+"},
                             std::pair{"periodic", "antiperiodic"}, std::pair{"fixed-", "fixed+"}}) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const StatePair p = pair_of(a, b, 1.0, 1000 + s);
      f_dev = std::max(f_dev, std::abs(interface_free_energy(p.with_beta(0.0)).value));
      const auto cut = p.with_couplings(set_block(p.gamma().couplings(), p.window(), kZero));
      f_dev = std::max(f_dev, std::abs(interface_free_energy(cut).value));
      f_cases += 2;
    }
  }
  const bool pass = tanh_dev <= 1e-12 && logz_exact && f_dev <= 1e-12;
  return {pass, fmt("isolated edge |corr - tanh| %.2e (60 cases); beta=0 log Z exact in %d/%d cases; |F| at beta=0 "
                    "or J_window=0 %.2e (%d cases)",
                    tanh_dev, logz_exact ? logz_cases : 0, logz_cases, f_dev, f_cases)};
}

// 3. Gradient against central finite differences.
Outcome gradient_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::pair<const char*, const char*> pairs[] = {
      {"free", "periodic"}, {"free", "fixed+"}, {"periodic", "antiperiodic"}, {"fixed-", "fixed+"}};
  const double h = 1e-4;
  double dev = 0.0;
  std::size_t edges = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto& [a, b] = pairs[s % 4];
    const StatePair p = pair_of(a, b, 1.0, 2000 + s);
    const auto g = free_energy_gradient(p);
    const auto& J = p.gamma().couplings();
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
      const Edge& e = g.edges[i];
      const double up = interface_free_energy(p.with_couplings(J.with_value(e, J.at(e) + h))).value;
      const double dn = interface_free_energy(p.with_couplings(J.with_value(e, J.at(e) - h))).value;
      dev = std::max(dev, std::abs((up - dn) / (2 * h) - g.gradient[i]));
      ++edges;
    }
  }
  const double elapsed = seconds_since(t0);
  return {dev <= 1e-5 && elapsed <= 300.0,
          fmt("20 instances 3x3 in 5x5, %zu edge derivatives, max |FD - beta(<ss>' - <ss>)| %.2e; %.1f s (budget 300 s)",
              edges, dev, elapsed)};
}

// 4. Reweighting: direct recomputation vs the reweighting formula.
Outcome reweighting() {
  const auto dist = CouplingDistribution::gaussian(0, 1);
  double torus_dev = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    torus_dev = std::max(torus_dev, covariance_sample(Region::torus({4, 4}), dist, 1.0, kSeed, i).coupling_deviation);
  }
  double box_dev = 0.0;
  const Region box = Region::open_box({4, 4});
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto bc = BoundaryCondition::parse(i % 2 ? "fixed+" : "free", box);
    const auto J = sample_couplings(dist, system_edges(box, bc), SeedSpec{kSeed, i, Purpose::Couplings, 0});
    const GibbsSpec g(box, J, 1.0, bc);
    auto rng = SeedSpec{kSeed, i, Purpose::BlockValues, 0}.engine();
    const Site origin{static_cast<int>(rng() % 3), static_cast<int>(rng() % 3), 0, 0};
    const Region block = Region::open_box({2, 2}).with_origin(origin);
    EdgeValues jb;
    for (const Edge& e : interior_edges(block)) jb[e] = dist.sample(rng);
    const GibbsSpec lifted = reweight(g, block, jb);
    for (const Edge& e : g.edges()) {
      const Observable f = [&](const SpinConfig& s) { return double(s(e.x) * s(e.y)); };
      if (bc.has_fixed() && !box.contains(e.x)) continue;
      if (bc.has_fixed() && !box.contains(e.y)) continue;
      box_dev = std::max(box_dev, std::abs(edge_correlation(lifted, e) - reweighting_formula_expectation(g, block, jb, f)));
    }
  }
  return {torus_dev <= 1e-10 && box_dev <= 1e-10,
          fmt("20 torus 4x4 samples max dev %.2e; 20 open-box samples (free, fixed+) over all box edges max dev %.2e",
              torus_dev, box_dev)};
}

// 5. Translation covariance on the torus.
Outcome translation() {
  double dev = 0.0;
  const auto dist = CouplingDistribution::gaussian(0, 1);
  for (std::size_t i = 0; i < 20; ++i) {
    dev = std::max(dev, covariance_sample(Region::torus({4, 4}), dist, 1.0, kSeed, i).translation_deviation);
  }
  return {dev <= 1e-10, fmt("20 (shift, edge) samples on a 4x4 torus, max |<ss>_TJ(Te) - <ss>_J(e)| %.2e", dev)};
}

// 6. Boundary bound and two-sided ratio bound.
Outcome boundary_bound() {
  auto c = config(Kind::Bounds, "bounds");
  c.window = 3;
  c.beta = {0.5, 1.0, 2.0};
  c.n = 1000;
  const auto t0 = std::chrono::steady_clock::now();
  const json r = run_report(c);
  const double elapsed = seconds_since(t0);
  double min_f = INFINITY, min_ratio = INFINITY;
  for (const auto& b : r["result"]["betas"]) {
    min_f = std::min(min_f, b["min_slack_f"].get<double>());
    min_ratio = std::min(min_ratio, b["min_ratio_slack"].get<double>());
  }
  const int violations = r["result"]["violations"].get<int>();
  return {violations == 0 && elapsed <= 600.0,
          fmt("3000 instances (1000 x beta 0.5,1,2), 3x3 in 5x5: %d violations, min slack %.3g (F), %.3g (ratios); "
              "%.1f s (budget 600 s)",
              violations, min_f, min_ratio, elapsed)};
}

struct MartingaleRun {
  json report;
  double seconds = 0.0;
};

const MartingaleRun& martingale_run() {
  static std::optional<MartingaleRun> cached;
  if (!cached) {
    auto c = config(Kind::Martingale, "martingale");
    c.window = 4;
    c.block = 2;
    c.n = 200;
    c.n_outer = 50;
    const auto t0 = std::chrono::steady_clock::now();
    json r = run_report(c);
    cached = MartingaleRun{std::move(r), seconds_since(t0)};
  }
  return *cached;
}

// 7. Variance identities.
Outcome variance_identities() {
  const auto g = gaussian_sum_identity(CouplingDistribution::gaussian(0, 1), 1000, 50, kSeed, 1000);
  std::string closed;
  for (const auto& c : g.checks) closed += fmt(" %s %.3f vs %.3f (%s);", c.name.c_str(), c.lhs, c.rhs, c.pass ? "ok" : "off");
  const json& f = martingale_run().report["result"]["f_identity"];
  std::string nested;
  for (const auto& c : f["checks"]) {
    nested += fmt(" %s %.4f vs %.4f (%s);", c["name"].get<std::string>().c_str(), c["lhs"].get<double>(),
                  c["rhs"].get<double>(), c["pass"] == true ? "ok" : "off");
  }
  return {g.pass && f["pass"] == true,
          "gaussian sum, n=1000:" + closed + " nested F, n=200:" + nested};
}

// 8. Martingale lower bound and exact telescoping.
Outcome martingale() {
  const auto& m = martingale_run();
  const json& d = m.report["result"]["decomposition"];
  const json& s = m.report["result"]["symmetric_pair"]["decomposition"];
  const json& routes = m.report["result"]["routes"];
  const bool pass = d["inequality_holds"] == true && d["telescoping_exact"] == true && m.seconds <= 1800.0;
  return {pass,
          fmt("4x4 window, 2x2 blocks, n=200, n_outer=50: Var F %.4f, sum Var(Delta_k) %.4f, slack %.4f +- %.4f; "
              "telescoping %s; symmetric-pair blocks agree %s (max z %.2f); routes z %.2f; %.1f s (budget 1800 s)",
              d["var_f"]["estimate"].get<double>(), d["increments"]["estimate"].get<double>(),
              d["slack"].get<double>(), d["slack_std_error"].get<double>(),
              d["telescoping_exact"] == true ? "exact" : "broken", s["blocks_agree"] == true ? "yes" : "no",
              s["block_max_z"].get<double>(), routes["z"].get<double>(), m.seconds)};
}

// 9. Edge-martingale increments and the MGF bound.
Outcome edge_martingale_and_mgf() {
  auto e = config(Kind::EdgeMartingale, "edge_martingale");
  e.window = 3;
  e.n = 100;
  e.n_outer = 20;
  const json er = run_report(e);
  const json& size = er["result"]["sizes"][0];
  auto m = config(Kind::Mgf, "mgf");
  m.window = 3;
  m.n = 200;
  m.n_outer = 50;
  m.t = {0.5, 1.0, 2.0};
  const json mr = run_report(m);
  std::string rows;
  for (const auto& r : mr["result"]["rows"]) {
    rows += fmt(" t=%g %.4f <= %.4g;", r["t"].get<double>(), r["empirical"].get<double>(), r["bound"].get<double>());
  }
  const bool pass = size["bound_holds"] == true && size["telescopes"] == true && mr["pass"] == true;
  return {pass, fmt("100 instances x %d edges: %d violations, min slack %.3g, telescoping %s; MGF (n=200):",
                    size["edges"].get<int>(), size["violations"].get<int>(), size["min_slack"].get<double>(),
                    size["telescopes"] == true ? "exact" : "broken") +
                    rows};
}

// 10. Incongruence density.
Outcome incongruence() {
  auto p = config(Kind::Probe, "probe");
  p.window = 3;
  p.n = 200;
  const json pr = run_report(p);
  auto same = config(Kind::Probe, "probe_identical");
  same.window = 3;
  same.n = 200;
  same.bc_prime = "free";
  const json sr = run_report(same);
  json at;
  for (const auto& r : pr["result"]["rows"]) {
    if (r["epsilon"].get<double>() == 0.01) at = r;
  }
  bool zero = sr["result"]["nonzero_mass"].get<double>() == 0.0;
  for (const auto& r : sr["result"]["rows"]) zero = zero && r["density"].get<double>() == 0.0;
  const bool pass = !at.is_null() && at["ci_lo"].get<double>() > 0.0 && zero;
  return {pass, fmt("free vs periodic, eps=0.01: density %.4f, 95%% CI [%.4f, %.4f]; identical pair density %s",
                    at.is_null() ? NAN : at["density"].get<double>(), at.is_null() ? NAN : at["ci_lo"].get<double>(),
                    at.is_null() ? NAN : at["ci_hi"].get<double>(), zero ? "exactly 0" : "nonzero")};
}

// 11. Byte-identical outputs across worker counts and reruns.
Outcome determinism() {
  std::vector<ExperimentConfig> cs;
  const auto add = [&](Kind k, const std::string& name, auto tweak) {
    auto c = config(k, name);
    c.window = 2;
    c.block = 1;
    c.n = 20;
    c.n_outer = 6;
    c.bootstrap = 200;
    tweak(c);
    cs.push_back(c);
  };
  const auto none = [](ExperimentConfig&) {};
  add(Kind::Fe, "det_fe", none);
  add(Kind::DomainWall, "det_domain_wall", none);
  add(Kind::Ensemble, "det_ensemble", [](ExperimentConfig& c) { c.n = 40; });
  add(Kind::Martingale, "det_martingale", none);
  add(Kind::EdgeMartingale, "det_edge_martingale", [](ExperimentConfig& c) { c.sizes = {2, 3}; c.n = 8; });
  add(Kind::Bounds, "det_bounds", [](ExperimentConfig& c) { c.beta = {0.5, 1.0, 2.0}; });
  add(Kind::Mgf, "det_mgf", none);
  add(Kind::Probe, "det_probe", none);
  add(Kind::Scaling, "det_scaling", [](ExperimentConfig& c) { c.sizes = {2, 3, 4}; });
  add(Kind::Covariance, "det_covariance", [](ExperimentConfig& c) { c.n = 6; c.block = 2; });
  add(Kind::OracleVerify, "det_oracle", [](ExperimentConfig& c) { c.extents = {3, 3}; c.n = 4; c.beta = {0.5, 2.0}; });
  int identical = 0;
  std::string differing;
  for (const auto& base : cs) {
    std::vector<std::map<std::string, std::string>> outputs;
    for (const auto& [workers, suffix] : {std::pair{1, "_w1"}, std::pair{8, "_w8"}, std::pair{1, "_w1_rerun"}}) {
      auto c = base;
      c.output = base.output + suffix;
      fs::remove_all(c.output);
      run_report(c, workers);
      outputs.push_back(files_of(c.output));
    }
    if (outputs[0] == outputs[1] && outputs[0] == outputs[2] && outputs[0].count("report.json")) {
      ++identical;
    } else {
      differing += " " + base.id;
    }
  }
  return {identical == static_cast<int>(cs.size()),
          fmt("%d/%zu kinds byte-identical (records, report.json, CSV) for workers 1, 8 and a rerun", identical,
              cs.size()) +
              (differing.empty() ? "" : "; differing:" + differing)};
}

// 12. Scaling study (report-only).
Outcome scaling() {
  auto c = config(Kind::Scaling, "scaling");
  c.sizes = {2, 3, 4};
  c.n = 200;
  const json r = run_report(c);
  const json& res = r["result"];
  std::string fits;
  bool ok = res["rows"].size() == 3 && res["fits"].size() == 2;
  for (const auto& f : res["fits"]) {
    const double lo = f["ci_lo"].get<double>(), hi = f["ci_hi"].get<double>();
    ok = ok && std::isfinite(lo) && std::isfinite(hi) && lo <= hi;
    fits += fmt(" %s exponent %.3f CI [%.3f, %.3f];", f["against"].get<std::string>().c_str(),
                f["exponent"].get<double>(), lo, hi);
  }
  const std::string note = res["note"].get<std::string>();
  ok = ok && note.find("not certifiable") != std::string::npos;
  return {ok, "L=2,3,4, n=200:" + fits + " note: " + note};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_out = argv[1];
  fs::create_directories(g_out);
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"oracle equivalence", oracle_equivalence},
      {"analytic identities", analytic_identities},
      {"gradient identity", gradient_identity},
      {"coupling covariance / reweighting", reweighting},
      {"translation covariance", translation},
      {"boundary bound", boundary_bound},
      {"variance identities", variance_identities},
      {"martingale decomposition", martingale},
      {"edge-martingale bound and MGF", edge_martingale_and_mgf},
      {"incongruence probe", incongruence},
      {"determinism", determinism},
      {"scaling study", scaling},
  };
  int failed = 0;
  int id = 0;
  for (const auto& [name, check] : criteria) {
    ++id;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", id - failed, id);
  return failed == 0 ? 0 : 1;
}
