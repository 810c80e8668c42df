#include <cmath>

#include "doctest.h"
#include "eaglass/error.hpp"
#include "eaglass/interface.hpp"

using namespace eaglass;

namespace {

Site s2(int a, int b) { return Site{a, b, 0, 0}; }

StatePair make_pair(int box_side, int win_side, const char* bc, const char* bc_prime, double beta,
                    std::uint64_t seed) {
  const Region box = Region::open_box({box_side, box_side});
  const Region win({win_side, win_side}, {}, s2(1, 1));
  const auto b1 = BoundaryCondition::parse(bc, box);
  const auto b2 = BoundaryCondition::parse(bc_prime, box);
  const BoundaryCondition both[] = {b1, b2};
  const auto J = sample_couplings(CouplingDistribution::gaussian(0, 1), universe_edges(box, both), SeedSpec{seed});
  return StatePair::make(box, win, b1, b2, J, beta);
}

}  // namespace

TEST_CASE("free energy vanishes in the trivial cases") {
  const auto p = make_pair(4, 2, "free", "periodic", 1.0, 1);
  CHECK(interface_free_energy(p.with_beta(0.0)).value == 0.0);
  const auto zero = p.with_couplings(set_block(p.gamma().couplings(), p.window(), kZero));
  CHECK(interface_free_energy(zero).value == 0.0);
  const auto same = make_pair(4, 2, "fixed+", "fixed+", 1.0, 2);
  CHECK(interface_free_energy(same).value == 0.0);
  CHECK(interface_free_energy(p).value != 0.0);
}

TEST_CASE("stored terms recompute the value and swapping negates it") {
  const auto p = make_pair(5, 3, "free", "fixed+", 1.0, 3);
  const auto r = interface_free_energy(p);
  CHECK(r.value == r.recompute());
  CHECK(interface_free_energy(p.swapped()).value == -r.value);
  CHECK(r.margin == 1);
  CHECK(r.bc_gamma == "free/free");
  CHECK(r.seed.has_value());
}

TEST_CASE("ratio route matches the direct expectation route") {
  for (std::uint64_t seed = 10; seed < 14; ++seed) {
    for (const auto& [a, b] : {std::pair{"free", "periodic"}, std::pair{"free", "fixed+"},
                               std::pair{"periodic", "antiperiodic"}, std::pair{"fixed-", "fixed+"}}) {
      const auto p = make_pair(4, 2, a, b, 1.0, seed);
      CHECK(std::abs(interface_free_energy(p).value - interface_free_energy_direct(p)) < 1e-9);
    }
  }
}

TEST_CASE("gradient matches central finite differences") {
  const auto p = make_pair(4, 2, "free", "fixed+", 1.0, 21);
  const auto g = free_energy_gradient(p);
  const double h = 1e-4;
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const Edge& e = g.edges[i];
    const auto& J = p.gamma().couplings();
    const double up = interface_free_energy(p.with_couplings(J.with_value(e, J.at(e) + h))).value;
    const double dn = interface_free_energy(p.with_couplings(J.with_value(e, J.at(e) - h))).value;
    CHECK(std::abs((up - dn) / (2 * h) - g.gradient[i]) < 1e-5);
  }
  const auto same = make_pair(4, 2, "free", "free", 1.0, 21);
  for (double x : free_energy_gradient(same).gradient) CHECK(x == 0.0);
  for (double x : free_energy_gradient(p.with_beta(0.0)).gradient) CHECK(x == 0.0);
}

TEST_CASE("correlation difference on a chain with clamped ends") {
  // ghost(+) -a- s0 -J- s1 -b- ghost(g): <s0 s1> = (tJ + p ta tb) / (1 + p tJ ta tb), p = g
  const Region box = Region::open_box({2});
  const double a = 0.7, j = -0.4, b = 1.1, beta = 1.3;
  const Edge left{Site{-1}, Site{0}, 0}, mid{Site{0}, Site{1}, 0}, right{Site{1}, Site{2}, 0};
  const BoundaryCondition plus({AxisBc::Fixed}, {}, GhostSpins{{Site{-1}, 1}, {Site{2}, 1}});
  const BoundaryCondition minus({AxisBc::Fixed}, {}, GhostSpins{{Site{-1}, 1}, {Site{2}, -1}});
  const CouplingConfig J(EdgeSet(box, {left, mid, right}), {a, j, b});
  const Region win({1}, {}, Site{0});
  const GibbsSpec g1(box, J, beta, plus), g2(box, J, beta, minus);
  const auto corr = [&](int p) {
    const double tj = std::tanh(beta * j), ta = std::tanh(beta * a), tb = std::tanh(beta * b);
    return (tj + p * ta * tb) / (1 + p * tj * ta * tb);
  };
  CHECK(std::abs(edge_correlation(g1, mid) - corr(1)) < 1e-12);
  CHECK(std::abs(edge_correlation_enum(g2, mid) - corr(-1)) < 1e-12);
  // The window {0} has no margin on the low side; compare correlations directly.
  CHECK_THROWS_AS(StatePair(g1, g2, win), PairError);

  const auto p = make_pair(4, 2, "free", "periodic", 1.0, 5);
  const Edge inside{s2(1, 1), s2(1, 2), 1};
  CHECK(correlation_difference(p, inside) ==
        edge_correlation(p.gamma(), inside) - edge_correlation(p.gamma_prime(), inside));
  const auto same = make_pair(4, 2, "periodic", "periodic", 1.0, 5);
  CHECK(correlation_difference(same, inside) == 0.0);
  CHECK(correlation_difference(p.with_beta(0.0), inside) == 0.0);
  CHECK_THROWS_AS(correlation_difference(p, Edge{s2(0, 0), s2(2, 2), 0}), ContainmentError);
}

TEST_CASE("domain wall free energy") {
  const Region box = Region::torus({4, 4});
  const auto ferro = CouplingConfig::constant(interior_edges(box), 1.0);
  // tests/oracle/domain_wall_reference.py
  CHECK(std::abs(domain_wall_free_energy(ferro, box, 1.0) - 6.405776163736828) < 1e-10);
  CHECK(domain_wall_free_energy(ferro, box, 0.0) == 0.0);
  CHECK(domain_wall_free_energy(CouplingConfig::constant(interior_edges(box), 0.0), box, 1.0) == 0.0);
  SolverOptions en;
  en.method = SolverMethod::Enumeration;
  CHECK(std::abs(domain_wall_free_energy(ferro, box, 1.0, 0, en) - 6.405776163736828) < 1e-10);
  CHECK(std::abs(domain_wall_free_energy(ferro, box, 1.0, 1) - 6.405776163736828) < 1e-10);
}

TEST_CASE("free energy depends only on the declared inputs") {
  const Region amb = Region::open_box({7, 7});
  const Region box({5, 5}, {}, s2(1, 1));
  const Region win({3, 3}, {}, s2(2, 2));
  const auto J = sample_couplings(CouplingDistribution::gaussian(0, 1), interior_edges(amb), SeedSpec{9});
  const auto bc1 = BoundaryCondition::free(2), bc2 = BoundaryCondition::fixed(box, 1);
  const auto p = StatePair::make(box, win, bc1, bc2, J, 1.0);
  // perturb every coupling not touching the box
  EdgeValues far;
  for (const Edge& e : J.edges()) {
    if (!box.contains(e.x) && !box.contains(e.y)) far[e] = J.at(e) + 1.0;
  }
  const auto q = StatePair::make(box, win, bc1, bc2, J.with_values(far), 1.0);
  CHECK(interface_free_energy(p).value == interface_free_energy(q).value);
}

TEST_CASE("boundary bound holds") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = make_pair(5, 3, "free", "fixed-", 2.0, seed);
    double bound = 0.0;
    for (const Edge& e : p.window_boundary()) bound += std::abs(p.gamma().couplings().at(e));
    CHECK(std::abs(interface_free_energy(p).value) <= 4 * p.beta() * bound + 1e-9);
  }
}

TEST_CASE("pair invariants") {
  const Region box = Region::open_box({4, 4});
  const auto J = CouplingConfig::constant(system_edges(box, BoundaryCondition::free(2)), 1.0);
  const GibbsSpec g(box, J, 1.0, BoundaryCondition::free(2));
  CHECK_THROWS_AS(StatePair(g, g.with_beta(2.0), Region({2, 2}, {}, s2(1, 1))), PairError);
  CHECK_THROWS_AS(StatePair(g, g, Region({2, 2}, {}, s2(0, 1))), PairError);
  const auto J2 = J.with_value(J.edges()[0], 0.5);
  CHECK_THROWS_AS(StatePair(g, g.with_couplings(J2), Region({2, 2}, {}, s2(1, 1))), PairError);
  CHECK(StatePair(g, g, Region({2, 2}, {}, s2(1, 1))).window_boundary().size() == 8);
}
