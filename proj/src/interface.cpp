#include "eaglass/interface.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>

#include "eaglass/error.hpp"

namespace eaglass {

namespace {

Region open_of(const Region& r) { return r.with_wrap(std::vector<bool>(r.dim(), false)); }

bool bit_equal(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

}  // namespace

StatePair::StatePair(GibbsSpec gamma, GibbsSpec gamma_prime, Region window)
    : gamma_(std::move(gamma)), gamma_prime_(std::move(gamma_prime)), window_(open_of(window)) {
  const Region& box = gamma_.box();
  if (!box.same_box(gamma_prime_.box())) throw PairError("states live on different boxes");
  if (!bit_equal(gamma_.beta(), gamma_prime_.beta())) throw PairError("states have different beta");
  const EdgeSet inner = interior_edges(open_of(box));
  for (const Edge& e : inner) {
    const auto a = gamma_.couplings().find(e);
    const auto b = gamma_prime_.couplings().find(e);
    if (!a || !b || !bit_equal(*a, *b)) {
      throw PairError("states disagree on the coupling of interior edge " + to_string(e, box.dim()));
    }
  }
  if (window_.dim() != box.dim()) throw PairError("window dimension differs from the box");
  margin_ = std::numeric_limits<int>::max();
  for (int a = 0; a < box.dim(); ++a) {
    const int lo = window_.origin()[a] - box.origin()[a];
    const int hi = box.extent(a) - (lo + window_.extent(a));
    margin_ = std::min({margin_, lo, hi});
  }
  if (margin_ < 1) {
    throw PairError("window must sit inside the box with margin >= 1 (got " + std::to_string(margin_) + ")");
  }
  window_edges_ = interior_edges(window_);
  window_boundary_ = boundary_edges(window_, open_of(box));
}

StatePair StatePair::make(const Region& box, const Region& window, const BoundaryCondition& bc,
                          const BoundaryCondition& bc_prime, const CouplingConfig& J, double beta) {
  return StatePair(GibbsSpec(box, J, beta, bc), GibbsSpec(box, J, beta, bc_prime), window);
}

StatePair StatePair::swapped() const { return StatePair(gamma_prime_, gamma_, window_); }

StatePair StatePair::with_couplings(const CouplingConfig& J) const {
  return StatePair(gamma_.with_couplings(J), gamma_prime_.with_couplings(J), window_);
}

StatePair StatePair::with_beta(double beta) const {
  return StatePair(gamma_.with_beta(beta), gamma_prime_.with_beta(beta), window_);
}

double FreeEnergyResult::recompute() const {
  return (log_z_gamma_cut - log_z_gamma) - (log_z_gamma_prime_cut - log_z_gamma_prime);
}

FreeEnergyResult interface_free_energy(const StatePair& pair, const SolverOptions& opts) {
  const auto cut = [&](const GibbsSpec& s) {
    return s.with_couplings(set_block(s.couplings(), pair.window(), kZero));
  };
  FreeEnergyResult r;
  r.solver = resolve_method(pair.gamma(), opts);
  r.log_z_gamma = log_partition(pair.gamma(), opts);
  r.log_z_gamma_cut = log_partition(cut(pair.gamma()), opts);
  r.log_z_gamma_prime = log_partition(pair.gamma_prime(), opts);
  r.log_z_gamma_prime_cut = log_partition(cut(pair.gamma_prime()), opts);
  r.value = r.recompute();
  r.beta = pair.beta();
  r.bc_gamma = pair.gamma().bc().describe();
  r.bc_gamma_prime = pair.gamma_prime().bc().describe();
  r.margin = pair.margin();
  if (const auto& p = pair.gamma().couplings().provenance()) r.seed = p->seed;
  return r;
}

double interface_free_energy_direct(const StatePair& pair, const SolverOptions& opts) {
  const double b = pair.beta();
  return log_expectation_exp_energy_enum(pair.gamma(), pair.window_edges(), b, opts) -
         log_expectation_exp_energy_enum(pair.gamma_prime(), pair.window_edges(), b, opts);
}

double domain_wall_free_energy(const CouplingConfig& J, const Region& box, double beta, int seam_axis,
                               const SolverOptions& opts) {
  const GibbsSpec periodic(box, J, beta, BoundaryCondition::periodic(box.dim()));
  const GibbsSpec anti(box, J, beta, BoundaryCondition::antiperiodic(box.dim(), seam_axis));
  return log_partition(periodic, opts) - log_partition(anti, opts);
}

FreeEnergyGradient free_energy_gradient(const StatePair& pair, const SolverOptions& opts) {
  FreeEnergyGradient g;
  g.edges = pair.window_edges();
  g.corr_gamma = edge_correlations(pair.gamma(), g.edges.edges(), opts);
  g.corr_gamma_prime = edge_correlations(pair.gamma_prime(), g.edges.edges(), opts);
  g.gradient.resize(g.edges.size());
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    g.gradient[i] = pair.beta() * (g.corr_gamma_prime[i] - g.corr_gamma[i]);
  }
  return g;
}

double correlation_difference(const StatePair& pair, const Edge& e, const SolverOptions& opts) {
  if (!pair.gamma().edges().contains(e) && !pair.gamma_prime().edges().contains(e)) {
    throw ContainmentError("edge " + to_string(e, pair.box().dim()) + " is not an edge of the box");
  }
  return edge_correlation(pair.gamma(), e, opts) - edge_correlation(pair.gamma_prime(), e, opts);
}

}  // namespace eaglass
