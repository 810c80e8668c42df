#pragma once

// Solver-internal representation of a Gibbs spec: spins indexed by the
// box's lexicographic site rank, weight w(s) = exp(beta * (sum_bonds J s_a s_b
// + sum_fields J g s_a)), with antiperiodic seam signs already applied.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "eaglass/exactsolve.hpp"

namespace eaglass::detail {

struct Bond {
  int a = 0;  // tail site index
  int b = 0;  // head site index
  double coupling = 0.0;
  int axis = 0;
  bool wraps = false;
};

// Coupling to a clamped ghost spin.
struct Field {
  int site = 0;
  double coupling = 0.0;
  int ghost = 1;
  int axis = 0;
};

struct SpinSystem {
  Region box;
  int n = 0;
  double beta = 0.0;
  std::vector<Bond> bonds;
  std::vector<Edge> bond_edges;
  std::vector<Field> fields;
  std::vector<Edge> field_edges;
};

SpinSystem compile(const GibbsSpec& spec);

// -1 when the edge's coupling enters the weight negated (antiperiodic seam).
int seam_sign(const GibbsSpec& spec, const Edge& e);

struct TermRef {
  bool field = false;
  std::size_t index = 0;
};

std::optional<TermRef> find_term(const SpinSystem& sys, const Edge& e);
// Adds a zero-coupling bond for a nearest-neighbour pair inside the box
// that carries no weight yet; throws ContainmentError otherwise.
TermRef ensure_term(SpinSystem& sys, const Edge& e);
// Adds a zero-coupling field with ghost spin +1 on a site, so that the
// field observable g s_x reads s_x.
TermRef add_site_term(SpinSystem& sys, const Site& x);

// ---------------------------------------------------------------------------
// Enumeration

struct PairTerm {
  int a, b;
  double c;
};
struct FieldTerm {
  int site;
  double c;
};

// Q(s) = sum c s_a s_b + sum c s_a
struct QuadraticForm {
  std::vector<PairTerm> pairs;
  std::vector<FieldTerm> fields;
};

// beta-scaled log-weight of the system.
QuadraticForm log_weight_form(const SpinSystem& sys);

// Enumerates all 2^n spin configurations in blocks of 2^k that share the
// high bits. Spin i is -1 when bit i of the configuration index is set.
class BlockEnumerator {
 public:
  explicit BlockEnumerator(int n);

  int n() const { return n_; }
  int low_bits() const { return k_; }
  std::uint64_t block_size() const { return std::uint64_t{1} << k_; }
  std::uint64_t block_count() const { return std::uint64_t{1} << (n_ - k_); }
  std::span<const double> low_sign(int j) const {
    return {signs_.data() + static_cast<std::size_t>(j) * block_size(), block_size()};
  }
  // Spin of site i within block `high` for low index l.
  int spin(int i, std::uint64_t high, std::uint64_t low) const {
    const std::uint64_t bits = i < k_ ? low >> i : high >> (i - k_);
    return (bits & 1U) ? -1 : 1;
  }

  class Compiled {
   public:
    Compiled(const BlockEnumerator& en, const QuadraticForm& q);
    // out[l] = Q(high, l)
    void evaluate(std::uint64_t high, std::span<double> out) const;

   private:
    struct Cross {
      int low;
      int high;
      double c;
    };
    const BlockEnumerator* en_;
    std::vector<double> base_;
    std::vector<PairTerm> high_pairs_;
    std::vector<FieldTerm> high_fields_;
    std::vector<Cross> cross_;
  };

 private:
  int n_;
  int k_;
  std::vector<double> signs_;
};

// Running log-sum-exp with companion weighted sums sharing the same scale.
class ScaledAccumulator {
 public:
  explicit ScaledAccumulator(std::size_t companions = 0) : sums_(companions, 0.0) {}
  // Absorbs a block whose weights are exp(q - shift) with shift = max(q);
  // `mass` is sum exp(q - shift), `companions` the matching weighted sums.
  void absorb(double shift, double mass, std::span<const double> companions);
  double log_mass() const;
  // companion / mass
  double ratio(std::size_t i) const { return sums_[i] / mass_; }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double mass_ = 0.0;
  std::vector<double> sums_;
};

void check_enum_cap(const SpinSystem& sys, const SolverOptions& opts);
double enum_log_partition(const SpinSystem& sys);
std::vector<double> enum_correlations(const SpinSystem& sys, std::span<const TermRef> terms);

// Gibbs averages of several observables evaluated on decoded configurations:
// returns sum_s g_i(s) w(s) / Z for each i, where `fill(sigma, g)` writes g(s).
using MultiObservable = std::function<void(const SpinConfig&, std::span<double>)>;
std::vector<double> enum_expectations(const SpinSystem& sys, std::size_t count, const MultiObservable& fill);

// ---------------------------------------------------------------------------
// Transfer matrix

struct Constraint {
  TermRef term;
  int sign = 1;
};

// Throws UnsupportedError when the layout is not a d = 2 strip of width
// <= width_cap.
void check_transfer_eligible(const SpinSystem& sys, int width_cap);
double transfer_log_partition(const SpinSystem& sys, int width_cap,
                              const std::optional<Constraint>& constraint = std::nullopt);

}  // namespace eaglass::detail
