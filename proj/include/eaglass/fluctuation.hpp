#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eaglass/disorder.hpp"
#include "eaglass/interface.hpp"
#include "eaglass/stats.hpp"

namespace eaglass {

/// Coupling-independent rule producing the state pair for a realization.
struct PairRule {
  Region box;
  Region window;
  BoundaryCondition bc;
  BoundaryCondition bc_prime;
  double beta = 1.0;

  // Union of the system edges of both states; realizations live on it.
  EdgeSet universe() const;
  StatePair realize(const CouplingConfig& J) const;
  bool identical() const { return bc == bc_prime; }
  std::string describe() const;
};

/// Size-independent pair description: an L^d window at distance `margin`
/// from the faces of an (L + 2 margin)^d box.
struct PairTemplate {
  std::string bc = "free";
  std::string bc_prime = "periodic";
  double beta = 1.0;
  int dim = 2;
  int margin = 1;

  PairRule at(int L) const;
};

struct EnsembleSpec {
  CouplingDistribution distribution = CouplingDistribution::gaussian(0.0, 1.0);
  PairRule rule;
  int n = 2;
  std::uint64_t master_seed = 0;
  SolverOptions solver;
  int bootstrap_resamples = 1000;
  int workers = 0;  // 0: EAGLASS_WORKERS, then hardware concurrency

  SeedSpec coupling_seed(std::size_t realization) const;
  CouplingConfig couplings(std::size_t realization) const;
  // Inner (conditioning) draw j of realization i on the given stream.
  CouplingConfig inner_draw(std::size_t realization, std::size_t j, Purpose stream = Purpose::Inner) const;
  double free_energy(const CouplingConfig& J) const;
  void validate(int min_n) const;
};

struct VarianceReport {
  double estimate = 0.0;
  double std_error = 0.0;
  int n = 0;
  int resamples = 0;
  SeedSpec bootstrap_seed;
  std::vector<double> components;
  std::vector<double> component_std_error;
  std::vector<std::string> flags;
};

struct EnsembleResult {
  VarianceReport variance;
  double mean = 0.0;
  double mean_std_error = 0.0;
  std::vector<FreeEnergyResult> realizations;
};

// Unbiased variance of F_Λ over spec.n independent realizations.
EnsembleResult ensemble_variance(const EnsembleSpec& spec);

enum class ConditioningRoute { Direct, Reweighting };

struct ConditionalEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> samples;
};

// M(F_Λ | J_B). Direct: hold E(B) at J, redraw everything else n_outer times
// from the inner stream. Reweighting: draw on the independent stream with the
// block couplings zeroed, apply L_{J_B} to both states, evaluate F.
ConditionalEstimate conditional_mean_given_block(const EnsembleSpec& spec, const CouplingConfig& J,
                                                 const Region& block, int n_outer, std::size_t realization,
                                                 ConditioningRoute route = ConditioningRoute::Direct);

/// Partial conditioning path Y_0 … Y_N for one realization. Y values are
/// rounded to a 2^-32 grid so the increments telescope exactly.
struct MartingaleTrace {
  std::vector<double> y;
  std::vector<double> y_std_error;
  std::vector<double> delta;        // Δ_k = Y_k − Y_{k−1}
  std::vector<double> delta_noise;  // Monte Carlo variance of each Δ_k estimate
  double f = 0.0;                   // F_Λ of the realization itself

  bool telescopes() const;
};

struct BlockConditioning {
  BlockPartition partition;
  int n_outer = 2;
};

struct BlockDecomposition {
  std::vector<MartingaleTrace> traces;
  VarianceReport var_f;
  VarianceReport increments;     // Σ_k Var(Δ_k); components per k
  VarianceReport block_variance; // Var(M(F | J_{B_k})) per block; estimate is their mean
  double slack = 0.0;            // Var(F) − Σ_k Var(Δ_k)
  double slack_std_error = 0.0;
  bool inequality_holds = false; // slack ≥ −3σ
  bool telescoping_exact = false;
  double block_max_z = 0.0;      // largest pairwise |v_a − v_b| / σ_ab
  bool blocks_agree = false;
  std::vector<double> f_values;
  std::vector<std::vector<double>> first_block_samples;  // F given J_{B_1}, per realization
};

BlockDecomposition martingale_block_decomposition(const EnsembleSpec& spec, const BlockConditioning& conditioning);

struct EdgeMartingale {
  MartingaleTrace trace;
  EdgeSet edges;               // E(Λ), lexicographic
  std::vector<double> bound;   // 2β(|J_{e_k}| + ν(|J|)) + 3 Monte Carlo σ
  std::vector<double> slack;   // bound − |Δ_k|
  bool bound_holds = false;
  // Independent estimates of both ends.
  double direct_end = 0.0;
  double direct_start = 0.0;
  double direct_std_error = 0.0;
  double telescope_z = 0.0;  // (Y_N − Y_0 − (direct_end − direct_start)) / σ
};

EdgeMartingale edge_martingale_trace(const EnsembleSpec& spec, std::size_t realization, int n_outer);
// Every realization of the ensemble, in realization order.
std::vector<EdgeMartingale> edge_martingale_ensemble(const EnsembleSpec& spec, int n_outer);

struct LindebergRow {
  int L = 0;
  int edges = 0;
  double tail = 0.0;  // Σ_k E[ΔY² 1{|ΔY| > δ √|E(Λ)|}]
  double tail_std_error = 0.0;
  double h1_mean = 0.0;  // (1/|E(Λ)|) Σ_k ΔY_k², noise-corrected, averaged
  double h1_dispersion = 0.0;
  double h1_std_error = 0.0;
};

struct LindebergReport {
  double delta = 1.0;
  std::vector<LindebergRow> rows;
  bool tail_decreasing = false;
};

LindebergReport lindeberg_diagnostic(const EnsembleSpec& base, const PairTemplate& pairs, const std::vector<int>& sizes,
                                     int n_outer, double delta);

struct RatioCheck {
  std::string observable;
  bool prime = false;      // which state
  double log_ratio = 0.0;  // log Γ(f) − log G_Λ(f)
  double slack = 0.0;      // 2βΣ|J| − |log_ratio|
};

struct BoundCheck {
  double f = 0.0;
  double boundary_abs_sum = 0.0;  // Σ_{∂Λ} |J_e|
  double bound_f = 0.0;           // 4β Σ |J|
  double slack_f = 0.0;
  double log_ratio_bound = 0.0;   // 2β Σ |J|
  std::vector<RatioCheck> ratios;
  double min_ratio_slack = 0.0;

  bool holds(double tol = 1e-9) const { return slack_f >= -tol && min_ratio_slack >= -tol; }
};

// |F_Λ| ≤ 4βΣ_{∂Λ}|J| and exp(−2βΣ|J|) ≤ Γ(f)/G_Λ(f) ≤ exp(2βΣ|J|) for
// f = exp(βH_Λ), 1 + σ_xσ_y and 2 + σ_x on the window. Throws BoundViolation
// carrying the instance when a slack drops below −tol and `strict` is set.
BoundCheck bound_check(const StatePair& pair, const FreeEnergyResult& result, const SolverOptions& opts = {},
                       bool strict = true, double tol = 1e-9);

struct MgfRow {
  double t = 0.0;
  double empirical = 0.0;
  double std_error = 0.0;
  double bound = 0.0;  // exp(4βt ν(|J|))
  bool pass = false;
};

struct MgfReport {
  int n = 0;
  int n_outer = 0;
  int boundary_edges = 0;
  std::vector<double> conditional_means;  // M(F | J_Λ) per realization
  std::vector<MgfRow> rows;
  bool pass = false;
};

MgfReport mgf_check(const EnsembleSpec& spec, const std::vector<double>& ts, int n_outer);

struct ProbeRow {
  double epsilon = 0.0;
  double density = 0.0;
  double std_error = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct IncongruenceReport {
  int n = 0;
  EdgeSet edges;
  std::vector<ProbeRow> rows;
  std::vector<double> edge_mean;
  std::vector<double> edge_std_error;
  double nonzero_mass = 0.0;  // share of realizations with some |δ| above roundoff
  double nonzero_tol = 1e-12;
};

IncongruenceReport incongruence_probe(const EnsembleSpec& spec, const std::vector<double>& epsilons);

/// Draws of X together with, for realization i, draws of X conditioned on
/// G = G_i.
struct ConditionedSamples {
  std::vector<double> x;
  std::vector<std::vector<double>> inner;
};

struct IdentityCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double std_error = 0.0;
  bool pass = false;
};

struct VarianceIdentityReport {
  int n = 0;
  double var_x = 0.0;
  double expected_conditional_variance = 0.0;  // E[Var(X|G)]
  double variance_of_conditional_mean = 0.0;   // Var(E[X|G])
  double symmetric_variance = 0.0;             // ½ E[(X − X′)²]
  double var_x_std_error = 0.0;
  double expected_conditional_variance_std_error = 0.0;
  double variance_of_conditional_mean_std_error = 0.0;
  double symmetric_variance_std_error = 0.0;
  std::vector<IdentityCheck> checks;
  bool pass = false;
};

VarianceIdentityReport variance_identity_checks(const ConditionedSamples& samples, int resamples,
                                                const SeedSpec& bootstrap_seed);

// X = J_1 + J_2, G = σ(J_1) under the given law; adds the closed forms.
VarianceIdentityReport gaussian_sum_identity(const CouplingDistribution& dist, int n, int n_inner,
                                             std::uint64_t master_seed, int resamples);

struct ScalingRow {
  int L = 0;
  int window_sites = 0;
  int boundary_edges = 0;
  double variance = 0.0;
  double std_error = 0.0;
};

struct ScalingFit {
  std::string against;  // "volume" or "boundary"
  double exponent = 0.0;
  double intercept = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct ScalingReport {
  std::vector<ScalingRow> rows;
  std::vector<ScalingFit> fits;
  bool degenerate = false;
  std::string note;
};

ScalingReport variance_scaling(const EnsembleSpec& base, const PairTemplate& pairs, const std::vector<int>& sizes);

struct CovarianceReport {
  int samples = 0;
  double max_translation_deviation = 0.0;
  double max_coupling_deviation = 0.0;
  std::vector<Site> shifts;
  bool pass = false;
};

// Translation and coupling covariance on a torus with periodic bc.
CovarianceReport covariance_property_tests(const Region& torus, const CouplingDistribution& dist, double beta,
                                           int samples, std::uint64_t master_seed, int block_side = 2,
                                           const SolverOptions& opts = {});

// ---------------------------------------------------------------------------
// Per-realization tasks and their reducers. Each batch operation above maps
// its task over the realizations and reduces in realization order; the
// harness uses the pieces directly to stream, persist and resume runs.

EnsembleResult summarize_ensemble(const EnsembleSpec& spec, std::vector<FreeEnergyResult> realizations);

struct BlockRealization {
  MartingaleTrace trace;
  std::vector<double> block_mean;   // M(F | J_{B_k}) estimate per block
  std::vector<double> block_noise;  // Monte Carlo variance of each estimate
  std::vector<double> first_block;  // inner F samples given J_{B_1}
};

BlockRealization block_realization(const EnsembleSpec& spec, const BlockConditioning& conditioning,
                                   std::size_t realization);
BlockDecomposition summarize_block_decomposition(const EnsembleSpec& spec, const std::vector<BlockRealization>& runs);

LindebergRow summarize_lindeberg_size(const EnsembleSpec& spec, const std::vector<EdgeMartingale>& traces,
                                      double delta, std::uint64_t substream);
LindebergReport lindeberg_from_rows(double delta, std::vector<LindebergRow> rows);

double mgf_realization(const EnsembleSpec& spec, std::size_t realization, int n_outer);
MgfReport summarize_mgf(const EnsembleSpec& spec, const std::vector<double>& ts, int n_outer,
                        std::vector<double> conditional_means);

// δ_xy = ⟨σσ⟩_Γ − ⟨σσ⟩_Γ′ over E(Λ).
std::vector<double> probe_realization(const EnsembleSpec& spec, std::size_t realization);
IncongruenceReport summarize_probe(const EnsembleSpec& spec, const std::vector<double>& epsilons,
                                   const std::vector<std::vector<double>>& deltas);

// values[s][i]: F_Λ of realization i at size index s.
ScalingReport summarize_scaling(const EnsembleSpec& base, const std::vector<PairRule>& rules, const std::vector<int>& sizes,
                                const std::vector<std::vector<double>>& values);

struct CovarianceSample {
  Site shift{};
  double translation_deviation = 0.0;
  double coupling_deviation = 0.0;
};

CovarianceSample covariance_sample(const Region& torus, const CouplingDistribution& dist, double beta,
                                   std::uint64_t master_seed, std::size_t sample, int block_side = 2,
                                   const SolverOptions& opts = {});
CovarianceReport summarize_covariance(const std::vector<CovarianceSample>& samples);

}  // namespace eaglass
