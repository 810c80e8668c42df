#include "eaglass/disorder.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

#include "eaglass/error.hpp"

namespace eaglass {

// ---------------------------------------------------------------------------
// CouplingDistribution

CouplingDistribution CouplingDistribution::gaussian(double mean, double stddev) {
  if (!(stddev > 0.0) || !std::isfinite(stddev) || !std::isfinite(mean)) {
    throw Error("gaussian coupling law needs finite mean and stddev > 0");
  }
  return {Kind::Gaussian, mean, stddev};
}

CouplingDistribution CouplingDistribution::uniform(double lo, double hi) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error("uniform coupling law needs finite lo < hi");
  }
  return {Kind::Uniform, lo, hi};
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

CouplingDistribution CouplingDistribution::parse(std::string_view text) {
  const auto open = text.find('(');
  const auto close = text.rfind(')');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    throw Error("cannot parse coupling law '" + std::string(text) + "'");
  }
  const std::string name = trim(text.substr(0, open));
  std::vector<double> args;
  std::string_view inner = text.substr(open + 1, close - open - 1);
  while (!inner.empty()) {
    const auto comma = inner.find(',');
    const std::string tok = trim(inner.substr(0, comma));
    try {
      std::size_t used = 0;
      args.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error("bad number '" + tok + "' in coupling law");
    }
    if (comma == std::string_view::npos) break;
    inner.remove_prefix(comma + 1);
  }
  if (args.size() != 2) throw Error("coupling law '" + name + "' takes two parameters");
  if (name == "gaussian") return gaussian(args[0], args[1]);
  if (name == "uniform") return uniform(args[0], args[1]);
  throw Error("unsupported coupling law '" + name + "' (continuous laws only: gaussian, uniform)");
}

double CouplingDistribution::mean() const {
  return kind_ == Kind::Gaussian ? p0_ : 0.5 * (p0_ + p1_);
}

double CouplingDistribution::abs_moment() const {
  if (kind_ == Kind::Gaussian) {
    const double mu = p0_, sd = p1_;
    return sd * std::sqrt(2.0 / std::numbers::pi) * std::exp(-mu * mu / (2 * sd * sd)) +
           mu * std::erf(mu / (sd * std::numbers::sqrt2));
  }
  const double lo = p0_, hi = p1_;
  if (lo >= 0) return 0.5 * (lo + hi);
  if (hi <= 0) return -0.5 * (lo + hi);
  return (lo * lo + hi * hi) / (2 * (hi - lo));
}

double CouplingDistribution::second_moment() const {
  if (kind_ == Kind::Gaussian) return p0_ * p0_ + p1_ * p1_;
  return (p1_ * p1_ * p1_ - p0_ * p0_ * p0_) / (3 * (p1_ - p0_));
}

double CouplingDistribution::fourth_moment() const {
  if (kind_ == Kind::Gaussian) {
    const double m2 = p0_ * p0_, s2 = p1_ * p1_;
    return m2 * m2 + 6 * m2 * s2 + 3 * s2 * s2;
  }
  return (std::pow(p1_, 5) - std::pow(p0_, 5)) / (5 * (p1_ - p0_));
}

double CouplingDistribution::sample(std::mt19937_64& rng) const {
  if (kind_ == Kind::Gaussian) return std::normal_distribution<double>(p0_, p1_)(rng);
  return std::uniform_real_distribution<double>(p0_, p1_)(rng);
}

std::string CouplingDistribution::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << (kind_ == Kind::Gaussian ? "gaussian(" : "uniform(") << p0_ << ',' << p1_ << ')';
  return os.str();
}

// ---------------------------------------------------------------------------
// Seeds

std::string_view to_string(Purpose p) {
  switch (p) {
    case Purpose::Couplings: return "couplings";
    case Purpose::Inner: return "inner";
    case Purpose::Bootstrap: return "bootstrap";
    case Purpose::EdgeDraw: return "edge-draw";
    case Purpose::Translation: return "translation";
    case Purpose::BlockValues: return "block-values";
    case Purpose::Independent: return "independent";
    case Purpose::Pairing: return "pairing";
  }
  return "unknown";
}

Purpose purpose_from_string(std::string_view s) {
  for (auto p : {Purpose::Couplings, Purpose::Inner, Purpose::Bootstrap, Purpose::EdgeDraw,
                 Purpose::Translation, Purpose::BlockValues, Purpose::Independent, Purpose::Pairing}) {
    if (to_string(p) == s) return p;
  }
  throw Error("unknown seed purpose '" + std::string(s) + "'");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t SeedSpec::key() const {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ realization);
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  return splitmix64(h ^ substream);
}

std::mt19937_64 SeedSpec::engine() const {
  const std::uint64_t k = key();
  std::seed_seq seq{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32),
                    static_cast<std::uint32_t>(realization), static_cast<std::uint32_t>(substream)};
  return std::mt19937_64(seq);
}

// ---------------------------------------------------------------------------
// CouplingConfig

CouplingConfig::CouplingConfig(EdgeSet edges, std::vector<double> values,
                               std::optional<CouplingProvenance> provenance)
    : edges_(std::move(edges)), values_(std::move(values)), provenance_(std::move(provenance)) {
  if (values_.size() != edges_.size()) throw Error("coupling count does not match edge count");
}

CouplingConfig CouplingConfig::constant(EdgeSet edges, double value) {
  std::vector<double> v(edges.size(), value);
  return CouplingConfig(std::move(edges), std::move(v));
}

double CouplingConfig::at(const Edge& e) const {
  auto i = edges_.index_of(e);
  if (!i) throw LookupError("no coupling declared for edge " + to_string(e, edges_.region().dim()));
  return values_[*i];
}

std::optional<double> CouplingConfig::find(const Edge& e) const {
  auto i = edges_.index_of(e);
  if (!i) return std::nullopt;
  return values_[*i];
}

CouplingConfig CouplingConfig::with_value(const Edge& e, double v) const {
  auto i = edges_.index_of(e);
  if (!i) throw LookupError("no coupling declared for edge " + to_string(e, edges_.region().dim()));
  std::vector<double> vals = values_;
  vals[*i] = v;
  return CouplingConfig(edges_, std::move(vals));
}

CouplingConfig CouplingConfig::with_values(const EdgeValues& values) const {
  std::vector<double> vals = values_;
  for (const auto& [e, v] : values) {
    auto i = edges_.index_of(e);
    if (!i) throw LookupError("no coupling declared for edge " + to_string(e, edges_.region().dim()));
    vals[*i] = v;
  }
  return CouplingConfig(edges_, std::move(vals));
}

CouplingConfig CouplingConfig::with_copied(const CouplingConfig& source,
                                           std::span<const std::size_t> indices) const {
  if (!(source.edges_ == edges_)) throw Error("with_copied requires identical edge sets");
  std::vector<double> vals = values_;
  for (std::size_t i : indices) vals.at(i) = source.values_[i];
  return CouplingConfig(edges_, std::move(vals));
}

bool CouplingConfig::operator==(const CouplingConfig& other) const {
  if (!(edges_ == other.edges_)) return false;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(values_[i]) != std::bit_cast<std::uint64_t>(other.values_[i])) {
      return false;
    }
  }
  return true;
}

CouplingConfig sample_couplings(const CouplingDistribution& dist, const EdgeSet& edges, const SeedSpec& seed) {
  auto rng = seed.engine();
  std::vector<double> values;
  values.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) values.push_back(dist.sample(rng));
  return CouplingConfig(edges, std::move(values), CouplingProvenance{dist, seed});
}

namespace {

std::vector<std::size_t> block_indices(const CouplingConfig& J, const EdgeSet& block_edges) {
  std::vector<std::size_t> idx;
  idx.reserve(block_edges.size());
  for (const Edge& e : block_edges) {
    auto i = J.edges().index_of(e);
    if (!i) {
      throw ContainmentError("block edge " + to_string(e, block_edges.region().dim()) +
                             " not in the coupling edge set");
    }
    idx.push_back(*i);
  }
  return idx;
}

}  // namespace

CouplingConfig set_block(const CouplingConfig& J, const Region& block, const EdgeValues& values) {
  const EdgeSet be = interior_edges(block);
  block_indices(J, be);
  for (const Edge& e : be) {
    if (!values.contains(e)) {
      throw IncompleteAssignmentError("no value given for block edge " + to_string(e, block.dim()));
    }
  }
  for (const auto& [e, v] : values) {
    if (!be.contains(e)) throw ContainmentError("value given for edge outside the block");
  }
  return J.with_values(values);
}

CouplingConfig set_block(const CouplingConfig& J, const Region& block, ZeroTag) {
  const auto idx = block_indices(J, interior_edges(block));
  std::vector<double> vals(J.values().begin(), J.values().end());
  for (std::size_t i : idx) vals[i] = 0.0;
  return CouplingConfig(J.edges(), std::move(vals));
}

CouplingConfig translate_couplings(const CouplingConfig& J, const Site& shift) {
  const Region& region = J.edges().region();
  if (!region.fully_wrapped()) {
    throw UnsupportedError("coupling translation is only defined on a torus");
  }
  std::vector<double> vals(J.size());
  for (std::size_t i = 0; i < J.size(); ++i) {
    const Edge moved = translate(J.edges()[i], shift, region);
    auto j = J.edges().index_of(moved);
    if (!j) throw LookupError("translated edge missing from the edge set");
    vals[*j] = J.values()[i];
  }
  return CouplingConfig(J.edges(), std::move(vals));
}

}  // namespace eaglass
