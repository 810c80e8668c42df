#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "eaglass/lattice.hpp"

namespace eaglass {

/// Continuous coupling law with closed-form moments. Discrete laws (for
/// example +-J) are not representable: the ensemble machinery relies on a
/// continuous density with a finite fourth moment.
class CouplingDistribution {
 public:
  enum class Kind { Gaussian, Uniform };

  static CouplingDistribution gaussian(double mean, double stddev);
  static CouplingDistribution uniform(double lo, double hi);
  // "gaussian(mean,stddev)" or "uniform(lo,hi)"; anything else is rejected.
  static CouplingDistribution parse(std::string_view text);

  Kind kind() const { return kind_; }
  double p0() const { return p0_; }
  double p1() const { return p1_; }

  double mean() const;
  double abs_moment() const;     // nu(|J|)
  double second_moment() const;  // nu(J^2)
  double fourth_moment() const;  // nu(J^4)

  double sample(std::mt19937_64& rng) const;
  std::string describe() const;

  bool operator==(const CouplingDistribution&) const = default;

 private:
  CouplingDistribution(Kind k, double a, double b) : kind_(k), p0_(a), p1_(b) {}
  Kind kind_;
  double p0_;  // mean or lo
  double p1_;  // stddev or hi
};

enum class Purpose : std::uint64_t {
  Couplings = 1,
  Inner = 2,
  Bootstrap = 3,
  EdgeDraw = 4,
  Translation = 5,
  BlockValues = 6,
  Independent = 7,
  Pairing = 8,
};

std::string_view to_string(Purpose p);
Purpose purpose_from_string(std::string_view s);

/// Label of one random stream. The generator state is derived from the whole
/// label by hashing, never by advancing a parent stream, so streams can be
/// created in any order on any thread.
struct SeedSpec {
  std::uint64_t master = 0;
  std::uint64_t realization = 0;
  Purpose purpose = Purpose::Couplings;
  std::uint64_t substream = 0;

  std::uint64_t key() const;
  std::mt19937_64 engine() const;
  bool operator==(const SeedSpec&) const = default;
};

struct CouplingProvenance {
  CouplingDistribution distribution;
  SeedSpec seed;
};

using EdgeValues = std::unordered_map<Edge, double, EdgeHash>;

struct ZeroTag {};
inline constexpr ZeroTag kZero{};

/// One realization of the couplings over a declared edge set. Immutable;
/// every modification returns a new configuration.
class CouplingConfig {
 public:
  CouplingConfig() = default;
  CouplingConfig(EdgeSet edges, std::vector<double> values,
                 std::optional<CouplingProvenance> provenance = std::nullopt);

  static CouplingConfig constant(EdgeSet edges, double value);

  const EdgeSet& edges() const { return edges_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  const std::optional<CouplingProvenance>& provenance() const { return provenance_; }

  // Throws LookupError for edges outside the declared set.
  double at(const Edge& e) const;
  std::optional<double> find(const Edge& e) const;

  CouplingConfig with_value(const Edge& e, double v) const;
  CouplingConfig with_values(const EdgeValues& values) const;
  // Copy the values at `indices` from `source`, which must share the edge set.
  CouplingConfig with_copied(const CouplingConfig& source, std::span<const std::size_t> indices) const;

  // Bit-exact comparison of edges and values; provenance is ignored.
  bool operator==(const CouplingConfig& other) const;

 private:
  EdgeSet edges_;
  std::vector<double> values_;
  std::optional<CouplingProvenance> provenance_;
};

// One i.i.d. draw per edge, taken in canonical edge order.
CouplingConfig sample_couplings(const CouplingDistribution& dist, const EdgeSet& edges, const SeedSpec& seed);

CouplingConfig set_block(const CouplingConfig& J, const Region& block, const EdgeValues& values);
CouplingConfig set_block(const CouplingConfig& J, const Region& block, ZeroTag);

// Requires the underlying region to be a torus; (TJ)_{Te} = J_e.
CouplingConfig translate_couplings(const CouplingConfig& J, const Site& shift);

}  // namespace eaglass
