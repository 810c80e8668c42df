#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eaglass/exactsolve.hpp"

namespace eaglass {

/// Two finite-volume Gibbs states on the same box Λ′, with the same β and the
/// same couplings on E(Λ′), differing only in boundary condition, together
/// with the window Λ ⊂ Λ′ on which the interface free energy is measured.
class StatePair {
 public:
  // Throws PairError when the invariants fail (box, beta, couplings on the
  // open interior edges, window inside the box with margin >= 1).
  StatePair(GibbsSpec gamma, GibbsSpec gamma_prime, Region window);

  // Both states share one coupling configuration, declared over the union
  // of their system edges.
  static StatePair make(const Region& box, const Region& window, const BoundaryCondition& bc,
                        const BoundaryCondition& bc_prime, const CouplingConfig& J, double beta);

  const GibbsSpec& gamma() const { return gamma_; }
  const GibbsSpec& gamma_prime() const { return gamma_prime_; }
  const Region& window() const { return window_; }
  const Region& box() const { return gamma_.box(); }
  double beta() const { return gamma_.beta(); }
  // Lattice distance from the window to the faces of the box.
  int margin() const { return margin_; }
  // E(Λ) and ∂Λ, both taken inside the open box.
  const EdgeSet& window_edges() const { return window_edges_; }
  const EdgeSet& window_boundary() const { return window_boundary_; }

  StatePair swapped() const;
  StatePair with_couplings(const CouplingConfig& J) const;
  StatePair with_beta(double beta) const;

 private:
  GibbsSpec gamma_;
  GibbsSpec gamma_prime_;
  Region window_;
  int margin_ = 0;
  EdgeSet window_edges_;
  EdgeSet window_boundary_;
};

struct FreeEnergyResult {
  double value = 0.0;
  double log_z_gamma = 0.0;            // log Z_Γ(J)
  double log_z_gamma_cut = 0.0;        // log Z_Γ(J∖Λ)
  double log_z_gamma_prime = 0.0;      // log Z_Γ′(J)
  double log_z_gamma_prime_cut = 0.0;  // log Z_Γ′(J∖Λ)
  SolverMethod solver = SolverMethod::Auto;
  double beta = 0.0;
  std::string bc_gamma;
  std::string bc_gamma_prime;
  int margin = 0;
  std::optional<SeedSpec> seed;

  // [log Z_Γ(J∖Λ) − log Z_Γ(J)] − [log Z_Γ′(J∖Λ) − log Z_Γ′(J)]
  double recompute() const;
};

// F_Λ = log Γ(exp βH_Λ) − log Γ′(exp βH_Λ) through the ratio of partition
// functions with and without the window couplings.
FreeEnergyResult interface_free_energy(const StatePair& pair, const SolverOptions& opts = {});

// Same quantity from one enumeration pass per state over exp(βH_Λ) itself.
double interface_free_energy_direct(const StatePair& pair, const SolverOptions& opts = {});

// log Z_periodic(J) − log Z_antiperiodic(J) on the box itself, the seam
// running across `seam_axis`.
double domain_wall_free_energy(const CouplingConfig& J, const Region& box, double beta, int seam_axis = 0,
                               const SolverOptions& opts = {});

struct FreeEnergyGradient {
  EdgeSet edges;  // E(Λ)
  std::vector<double> gradient;
  std::vector<double> corr_gamma;
  std::vector<double> corr_gamma_prime;
};

// ∂F_Λ/∂J_xy = β(⟨σ_xσ_y⟩_Γ′ − ⟨σ_xσ_y⟩_Γ) for every edge of E(Λ).
FreeEnergyGradient free_energy_gradient(const StatePair& pair, const SolverOptions& opts = {});

// δ_xy = ⟨σ_xσ_y⟩_Γ − ⟨σ_xσ_y⟩_Γ′ for an edge weighted by either state.
double correlation_difference(const StatePair& pair, const Edge& e, const SolverOptions& opts = {});

}  // namespace eaglass
