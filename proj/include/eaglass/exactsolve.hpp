#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "eaglass/disorder.hpp"
#include "eaglass/lattice.hpp"

namespace eaglass {

enum class AxisBc { Free, Periodic, Antiperiodic, Fixed };

std::string_view to_string(AxisBc b);

using GhostSpins = std::unordered_map<Site, int, SiteHash>;

/// Boundary condition of a finite box, chosen per axis.
///
/// Periodic and antiperiodic axes wrap the box. On an antiperiodic axis the
/// couplings of the edges leaving the seam layer (default: the last layer,
/// i.e. the wrap edges) enter the weight with flipped sign. Fixed axes attach
/// clamped ghost spins one step outside each face; the ghost couplings are
/// ordinary entries of the coupling configuration.
class BoundaryCondition {
 public:
  BoundaryCondition() = default;
  BoundaryCondition(std::vector<AxisBc> axes, std::vector<int> seams = {}, GhostSpins ghosts = {});

  static BoundaryCondition free(int dim);
  static BoundaryCondition periodic(int dim);
  // Antiperiodic along `seam_axis`, periodic along the others.
  static BoundaryCondition antiperiodic(int dim, int seam_axis);
  // Every axis fixed, every ghost spin equal to `spin`.
  static BoundaryCondition fixed(const Region& box, int spin);

  // Parses "free", "periodic", "antiperiodic", "fixed+", "fixed-", or a
  // per-axis list such as "free/periodic" or "periodic/antiperiodic@2"
  // (seam layer after '@'). Fixed ghosts get a uniform spin.
  static BoundaryCondition parse(std::string_view text, const Region& box);

  int dim() const { return static_cast<int>(axes_.size()); }
  const std::vector<AxisBc>& axes() const { return axes_; }
  AxisBc axis(int a) const { return axes_.at(a); }
  // Seam layer on axis a; -1 means the last layer.
  int seam(int a) const { return seams_.at(a); }
  const GhostSpins& ghosts() const { return ghosts_; }
  std::vector<bool> wrap_flags() const;
  bool has_fixed() const;

  std::string describe() const;
  bool operator==(const BoundaryCondition& other) const;

 private:
  std::vector<AxisBc> axes_;
  std::vector<int> seams_;
  GhostSpins ghosts_;
};

// Sites one step outside each face of the box along the fixed axes.
std::vector<Site> ghost_sites(const Region& box, const BoundaryCondition& bc);

// All edges that carry a weight under the boundary condition: E(box) with the
// bc's wrap flags plus the ghost edges of fixed axes.
EdgeSet system_edges(const Region& box, const BoundaryCondition& bc);

// Union of system_edges over several boundary conditions on the same box.
EdgeSet universe_edges(const Region& box, std::span<const BoundaryCondition> bcs);

/// Finite-volume Gibbs state: box, couplings, inverse temperature, bc.
/// The box's wrap flags are taken from the boundary condition.
class GibbsSpec {
 public:
  GibbsSpec(Region box, CouplingConfig couplings, double beta, BoundaryCondition bc);

  const Region& box() const { return box_; }
  const CouplingConfig& couplings() const { return couplings_; }
  double beta() const { return beta_; }
  const BoundaryCondition& bc() const { return bc_; }
  const EdgeSet& edges() const { return system_edges_; }

  GibbsSpec with_couplings(CouplingConfig J) const;
  GibbsSpec with_beta(double beta) const;

 private:
  Region box_;
  CouplingConfig couplings_;
  double beta_;
  BoundaryCondition bc_;
  EdgeSet system_edges_;
};

/// Spin assignment over the sites of a region, spins in {-1, +1}.
class SpinConfig {
 public:
  SpinConfig(Region region, std::vector<std::int8_t> spins);
  static SpinConfig uniform(Region region, int spin);

  const Region& region() const { return region_; }
  // Throws CoverageError for sites outside the region.
  int operator()(const Site& s) const;
  int at(std::size_t index) const { return spins_[index]; }
  void set(std::size_t index, int spin) { spins_[index] = static_cast<std::int8_t>(spin); }
  std::span<const std::int8_t> spins() const { return spins_; }

 private:
  Region region_;
  std::vector<std::int8_t> spins_;
};

enum class SolverMethod { Auto, Enumeration, Transfer };

std::string_view to_string(SolverMethod m);

struct SolverOptions {
  SolverMethod method = SolverMethod::Auto;
  int enum_cap = 24;      // free spins
  int transfer_cap = 12;  // strip width
};

// H = -sum_{(x,y) in edges} J_xy s_x s_y, summed in canonical edge order.
double energy(const SpinConfig& sigma, const CouplingConfig& J, const EdgeSet& edges);

double log_partition_enum(const GibbsSpec& spec, const SolverOptions& opts = {});
double log_partition_transfer(const GibbsSpec& spec, const SolverOptions& opts = {});
// Transfer matrix when the spec is eligible, enumeration otherwise.
double log_partition(const GibbsSpec& spec, const SolverOptions& opts = {});

// The method `log_partition` would use; throws SizeError if none applies.
SolverMethod resolve_method(const GibbsSpec& spec, const SolverOptions& opts);

double edge_correlation_enum(const GibbsSpec& spec, const Edge& e, const SolverOptions& opts = {});
double edge_correlation_transfer(const GibbsSpec& spec, const Edge& e, const SolverOptions& opts = {});
double edge_correlation(const GibbsSpec& spec, const Edge& e, const SolverOptions& opts = {});
std::vector<double> edge_correlations(const GibbsSpec& spec, std::span<const Edge> edges,
                                      const SolverOptions& opts = {});

// <s_x> for a site of the box.
double site_magnetization(const GibbsSpec& spec, const Site& x, const SolverOptions& opts = {});

using Observable = std::function<double(const SpinConfig&)>;

// sum_s f(s) w(s) / Z over every spin configuration of the box.
double gibbs_expectation_enum(const GibbsSpec& spec, const Observable& f, const SolverOptions& opts = {});

// log G(exp(scale * H_edges)), H_edges = -sum_{e in edges} J_e s_x s_y, in a
// single enumeration pass (no ratio of partition functions).
double log_expectation_exp_energy_enum(const GibbsSpec& spec, const EdgeSet& edges, double scale,
                                       const SolverOptions& opts = {});

// Couplings become J + J_B on E(block).
GibbsSpec reweight(const GibbsSpec& spec, const Region& block, const EdgeValues& block_couplings);

// The reweighting formula on the original state:
//   G(f exp(-beta H_{B,J_B})) / G(exp(-beta H_{B,J_B})).
double reweighting_formula_expectation(const GibbsSpec& spec, const Region& block,
                                       const EdgeValues& block_couplings, const Observable& f,
                                       const SolverOptions& opts = {});

}  // namespace eaglass
