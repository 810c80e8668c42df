#include <cmath>
#include <numbers>

#include "../oracle/brute.hpp"
#include "doctest.h"
#include "eaglass/error.hpp"
#include "eaglass/exactsolve.hpp"

using namespace eaglass;

namespace {

Site s2(int a, int b) { return Site{a, b, 0, 0}; }

GibbsSpec make_spec(const Region& box, const std::string& bc_text, double beta, std::uint64_t seed) {
  const auto bc = BoundaryCondition::parse(bc_text, box);
  const auto J = sample_couplings(CouplingDistribution::gaussian(0, 1), system_edges(box, bc), SeedSpec{seed});
  return GibbsSpec(box, J, beta, bc);
}

const char* kBcs[] = {"free", "periodic", "antiperiodic", "fixed+", "fixed-", "free/periodic",
                      "periodic/antiperiodic", "fixed+/periodic", "antiperiodic@0/free"};

}  // namespace

TEST_CASE("energy") {
  const Region box = Region::open_box({2, 2});
  const EdgeSet e = interior_edges(box);
  const auto up = SpinConfig::uniform(box, 1);
  CHECK(energy(up, CouplingConfig::constant(e, 0.0), e) == 0.0);
  CHECK(energy(up, CouplingConfig::constant(e, 1.0), e) == -4.0);
  const Region pair = Region::open_box({2});
  const EdgeSet pe = interior_edges(pair);
  CHECK(energy(SpinConfig::uniform(pair, 1), CouplingConfig::constant(pe, 1.0), pe) == -1.0);
  const EdgeSet big = interior_edges(Region::open_box({3, 3}));
  CHECK_THROWS_AS(energy(up, CouplingConfig::constant(big, 1.0), big), CoverageError);
}

TEST_CASE("closed-form partition functions") {
  const Region one = Region::open_box({1});
  const GibbsSpec single(one, CouplingConfig::constant(interior_edges(one), 0.0), 1.0, BoundaryCondition::free(1));
  CHECK(log_partition_enum(single) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  const Region pair = Region::open_box({2});
  const Edge e{Site{0}, Site{1}, 0};
  const double J = 0.73, beta = 1.3;
  const GibbsSpec two(pair, CouplingConfig(interior_edges(pair), {J}), beta, BoundaryCondition::free(1));
  const double expect = std::log(2 * std::exp(beta * J) + 2 * std::exp(-beta * J));
  CHECK(std::abs(log_partition_enum(two) - expect) < 1e-14);
  CHECK(std::abs(log_partition_transfer(two) - expect) < 1e-14);
  CHECK(std::abs(edge_correlation_enum(two, e) - std::tanh(beta * J)) < 1e-12);
  CHECK(std::abs(edge_correlation_transfer(two, e) - std::tanh(beta * J)) < 1e-12);

  for (const auto& ext : {std::vector<int>{3, 4}, std::vector<int>{3, 3}, std::vector<int>{2, 5}}) {
    const Region box = Region::open_box(ext);
    const double expect = static_cast<double>(box.site_count()) * std::numbers::ln2;
    for (const char* bc : kBcs) {
      const auto spec = make_spec(box, bc, 0.0, 9);
      CHECK(log_partition_enum(spec) == expect);
      CHECK(log_partition_transfer(spec) == expect);
    }
  }
}

TEST_CASE("chain of width one") {
  const Region chain = Region::open_box({9, 1});
  const auto spec = make_spec(chain, "free", 1.0, 4);
  double expect = std::log(2.0);
  for (double j : spec.couplings().values()) expect += std::log(2 * std::cosh(j));
  CHECK(std::abs(log_partition_enum(spec) - expect) < 1e-12);
  CHECK(std::abs(log_partition_transfer(spec) - expect) < 1e-12);
}

TEST_CASE("enumeration, transfer matrix and brute force agree") {
  const Region boxes[] = {Region::open_box({2, 2}), Region::open_box({3, 3}), Region::open_box({2, 5}),
                          Region::open_box({4, 3}), Region({3, 3}, {}, s2(1, 2))};
  std::uint64_t seed = 100;
  for (const Region& box : boxes) {
    for (const char* bc : kBcs) {
      for (double beta : {0.5, 1.0, 2.0}) {
        const auto spec = make_spec(box, bc, beta, ++seed);
        const std::string label = std::string(bc) + " beta=" + std::to_string(beta) + " box=" +
                                  std::to_string(box.extent(0)) + "x" + std::to_string(box.extent(1));
        CAPTURE(label);
        const double ref = oracle::log_partition(spec);
        CHECK(std::abs(log_partition_enum(spec) - ref) < 1e-10);
        CHECK(std::abs(log_partition_transfer(spec) - ref) < 1e-10);
        for (const Edge& e : spec.edges()) {
          const double c = oracle::correlation(spec, e);
          CHECK(std::abs(edge_correlation_enum(spec, e) - c) < 1e-11);
          CHECK(std::abs(edge_correlation_transfer(spec, e) - c) < 1e-11);
        }
      }
    }
  }
}

TEST_CASE("enumeration beyond one low block") {
  const auto spec = make_spec(Region::open_box({4, 4}), "periodic/free", 1.1, 77);
  const double ref = oracle::log_partition(spec);
  CHECK(std::abs(log_partition_enum(spec) - ref) < 1e-10);
  CHECK(std::abs(log_partition_transfer(spec) - ref) < 1e-10);
  const Edge e{s2(3, 2), s2(0, 2), 0};
  CHECK(std::abs(edge_correlation_enum(spec, e) - oracle::correlation(spec, e)) < 1e-11);
}

TEST_CASE("correlation of a pair not joined by a weighted edge") {
  const auto spec = make_spec(Region::open_box({3, 3}), "free", 1.0, 3);
  const auto torus = make_spec(Region::open_box({3, 3}), "periodic", 1.0, 3);
  // The wrap pair exists geometrically only in the periodic spec.
  const Edge wrap{s2(2, 1), s2(0, 1), 0};
  CHECK_THROWS_AS(edge_correlation_enum(spec, wrap), ContainmentError);
  CHECK(std::abs(edge_correlation_transfer(torus, wrap) - oracle::correlation(torus, wrap)) < 1e-11);
}

TEST_CASE("normalisation, bounds, gauge symmetry") {
  const auto spec = make_spec(Region::open_box({3, 3}), "free", 1.5, 21);
  CHECK(std::abs(gibbs_expectation_enum(spec, [](const SpinConfig&) { return 1.0; }) - 1.0) < 1e-12);
  for (const Edge& e : spec.edges()) {
    const double c = edge_correlation(spec, e);
    CHECK(c >= -1.0);
    CHECK(c <= 1.0);
    const double viaf = gibbs_expectation_enum(spec, [&](const SpinConfig& s) { return double(s(e.x) * s(e.y)); });
    CHECK(std::abs(viaf - edge_correlation_enum(spec, e)) < 1e-12);
  }
  // flip couplings incident to the centre site
  EdgeValues flipped;
  for (const Edge& e : spec.edges()) {
    if (e.x == s2(1, 1) || e.y == s2(1, 1)) flipped[e] = -spec.couplings().at(e);
  }
  const auto gauge = spec.with_couplings(spec.couplings().with_values(flipped));
  CHECK(std::abs(log_partition(gauge) - log_partition(spec)) < 1e-10);
}

TEST_CASE("derivative of log Z is beta times the correlation") {
  const auto spec = make_spec(Region::open_box({3, 3}), "fixed+/periodic", 0.9, 5);
  const double h = 1e-4;
  for (const Edge& e : spec.edges()) {
    const double j = spec.couplings().at(e);
    const double up = log_partition(spec.with_couplings(spec.couplings().with_value(e, j + h)));
    const double dn = log_partition(spec.with_couplings(spec.couplings().with_value(e, j - h)));
    CHECK(std::abs((up - dn) / (2 * h) - spec.beta() * edge_correlation(spec, e)) < 1e-5);
  }
}

TEST_CASE("log expectation of exp(scale H) on a sub-window") {
  const Region box = Region::open_box({4, 4});
  const auto spec = make_spec(box, "fixed-", 1.0, 8);
  const Region win({2, 2}, {}, s2(1, 1));
  const EdgeSet we = interior_edges(win);
  const double direct = log_expectation_exp_energy_enum(spec, we, spec.beta());
  const double ratio =
      log_partition_enum(spec.with_couplings(set_block(spec.couplings(), win, kZero))) - log_partition_enum(spec);
  CHECK(std::abs(direct - ratio) < 1e-12);
  const double generic = std::log(gibbs_expectation_enum(spec, [&](const SpinConfig& s) {
    return std::exp(spec.beta() * energy(s, spec.couplings(), we));
  }));
  CHECK(std::abs(direct - generic) < 1e-12);
}

TEST_CASE("reweighting") {
  const Region pair = Region::open_box({2});
  const Edge e{Site{0}, Site{1}, 0};
  const GibbsSpec two(pair, CouplingConfig(interior_edges(pair), {0.4}), 1.2, BoundaryCondition::free(1));
  const auto rw = reweight(two, pair, EdgeValues{{e, 0.3}});
  CHECK(std::abs(edge_correlation(rw, e) - std::tanh(1.2 * 0.7)) < 1e-12);
  CHECK(reweight(two, pair, EdgeValues{{e, 0.0}}).couplings() == two.couplings());

  const auto spec = make_spec(Region::open_box({3, 3}), "free", 1.0, 17);
  const Region blk({2, 2}, {}, s2(1, 0));
  EdgeValues jb;
  double v = -0.9;
  for (const Edge& x : interior_edges(blk)) jb[x] = (v += 0.45);
  const auto moved = reweight(spec, blk, jb);
  for (const Edge& x : spec.edges()) {
    const double lhs = edge_correlation_enum(moved, x);
    const double rhs =
        reweighting_formula_expectation(spec, blk, jb, [&](const SpinConfig& s) { return double(s(x.x) * s(x.y)); });
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
  CHECK_THROWS_AS(reweight(spec, Region({2, 2}, {}, s2(2, 2)), {}), ContainmentError);
}

TEST_CASE("solver selection and caps") {
  const auto big = make_spec(Region::open_box({5, 5}), "free", 1.0, 1);
  CHECK(resolve_method(big, {}) == SolverMethod::Transfer);
  CHECK_THROWS_AS(log_partition_enum(big), SizeError);
  SolverOptions narrow;
  narrow.transfer_cap = 4;
  CHECK_THROWS_AS(log_partition_transfer(big, narrow), UnsupportedError);
  CHECK_THROWS_AS(log_partition(big, narrow), SizeError);
  const Region cube = Region::open_box({2, 2, 2});
  const GibbsSpec c3(cube, CouplingConfig::constant(interior_edges(cube), 1.0), 1.0, BoundaryCondition::free(3));
  CHECK(resolve_method(c3, {}) == SolverMethod::Enumeration);
  CHECK_THROWS_AS(log_partition_transfer(c3), UnsupportedError);
  CHECK(std::abs(log_partition(c3) - oracle::log_partition(c3)) < 1e-12);
}

TEST_CASE("spec validation") {
  const Region box = Region::open_box({3, 3});
  const auto bc = BoundaryCondition::parse("periodic", box);
  const auto J = CouplingConfig::constant(interior_edges(box), 1.0);
  CHECK_THROWS_AS(GibbsSpec(box, J, 1.0, bc), LookupError);
  CHECK_THROWS_AS(GibbsSpec(box, J, -1.0, BoundaryCondition::free(2)), Error);
  CHECK_THROWS_AS(GibbsSpec(box, J, INFINITY, BoundaryCondition::free(2)), Error);
  BoundaryCondition partial({AxisBc::Fixed, AxisBc::Free}, {}, GhostSpins{{Site{-1, 0, 0, 0}, 1}});
  CHECK_THROWS_AS(GibbsSpec(box, CouplingConfig::constant(system_edges(box, partial), 1.0), 1.0, partial), Error);
  CHECK(BoundaryCondition::parse("periodic/antiperiodic@1", box).describe() == "periodic/antiperiodic@1");
  CHECK_THROWS_AS(BoundaryCondition::parse("twisted", box), Error);
  CHECK(system_edges(box, BoundaryCondition::parse("fixed+", box)).size() == 12 + 12);
}

TEST_CASE("site magnetization") {
  for (const char* bc : {"fixed+", "fixed-/free", "free"}) {
    const auto spec = make_spec(Region::open_box({3, 3}), bc, 0.8, 31);
    for (const Site& x : spec.box().sites()) {
      const int i = static_cast<int>(spec.box().index_of(x));
      const double ref = oracle::expectation(spec, [&](std::uint64_t s) -> long double { return oracle::spin_of(s, i); });
      CHECK(std::abs(site_magnetization(spec, x) - ref) < 1e-11);
      SolverOptions en;
      en.method = SolverMethod::Enumeration;
      CHECK(std::abs(site_magnetization(spec, x, en) - ref) < 1e-11);
    }
  }
}
