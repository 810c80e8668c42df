#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "eaglass/error.hpp"
#include "eaglass/exactsolve.hpp"
#include "spin_system.hpp"

namespace eaglass {

std::string_view to_string(AxisBc b) {
  switch (b) {
    case AxisBc::Free: return "free";
    case AxisBc::Periodic: return "periodic";
    case AxisBc::Antiperiodic: return "antiperiodic";
    case AxisBc::Fixed: return "fixed";
  }
  return "?";
}

std::string_view to_string(SolverMethod m) {
  switch (m) {
    case SolverMethod::Auto: return "auto";
    case SolverMethod::Enumeration: return "enumeration";
    case SolverMethod::Transfer: return "transfer";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// BoundaryCondition

BoundaryCondition::BoundaryCondition(std::vector<AxisBc> axes, std::vector<int> seams, GhostSpins ghosts)
    : axes_(std::move(axes)), seams_(std::move(seams)), ghosts_(std::move(ghosts)) {
  if (seams_.empty()) seams_.assign(axes_.size(), -1);
  if (seams_.size() != axes_.size()) throw Error("seam list must match boundary dimension");
  for (const auto& [site, spin] : ghosts_) {
    if (spin != 1 && spin != -1) throw Error("ghost spins must be +1 or -1");
  }
}

BoundaryCondition BoundaryCondition::free(int dim) { return BoundaryCondition(std::vector<AxisBc>(dim, AxisBc::Free)); }

BoundaryCondition BoundaryCondition::periodic(int dim) {
  return BoundaryCondition(std::vector<AxisBc>(dim, AxisBc::Periodic));
}

BoundaryCondition BoundaryCondition::antiperiodic(int dim, int seam_axis) {
  if (seam_axis < 0 || seam_axis >= dim) throw Error("seam axis out of range");
  std::vector<AxisBc> axes(dim, AxisBc::Periodic);
  axes[seam_axis] = AxisBc::Antiperiodic;
  return BoundaryCondition(std::move(axes));
}

BoundaryCondition BoundaryCondition::fixed(const Region& box, int spin) {
  BoundaryCondition bc(std::vector<AxisBc>(box.dim(), AxisBc::Fixed));
  for (const Site& g : ghost_sites(box, bc)) bc.ghosts_[g] = spin;
  if (spin != 1 && spin != -1) throw Error("ghost spins must be +1 or -1");
  return bc;
}

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto p = s.find(sep, start);
    out.emplace_back(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

struct AxisToken {
  AxisBc kind;
  int seam = -1;
  int ghost = 1;
};

AxisToken parse_axis_token(const std::string& tok) {
  if (tok == "free") return {AxisBc::Free};
  if (tok == "periodic") return {AxisBc::Periodic};
  if (tok == "fixed+" || tok == "fixed") return {AxisBc::Fixed, -1, 1};
  if (tok == "fixed-") return {AxisBc::Fixed, -1, -1};
  if (tok.rfind("antiperiodic", 0) == 0) {
    AxisToken t{AxisBc::Antiperiodic};
    const auto at = tok.find('@');
    if (at != std::string::npos) {
      try {
        t.seam = std::stoi(tok.substr(at + 1));
      } catch (const std::exception&) {
        throw Error("bad seam in boundary condition '" + tok + "'");
      }
    } else if (tok != "antiperiodic") {
      throw Error("unknown boundary condition '" + tok + "'");
    }
    return t;
  }
  throw Error("unknown boundary condition '" + tok + "'");
}

}  // namespace

BoundaryCondition BoundaryCondition::parse(std::string_view text, const Region& box) {
  const auto tokens = split(text, '/');
  std::vector<AxisToken> per_axis;
  if (tokens.size() == 1) {
    const AxisToken t = parse_axis_token(tokens[0]);
    per_axis.assign(box.dim(), t);
    if (t.kind == AxisBc::Antiperiodic) {
      for (int a = 1; a < box.dim(); ++a) per_axis[a] = {AxisBc::Periodic};
    }
  } else {
    if (static_cast<int>(tokens.size()) != box.dim()) {
      throw Error("boundary condition '" + std::string(text) + "' does not match box dimension");
    }
    for (const auto& tok : tokens) per_axis.push_back(parse_axis_token(tok));
  }
  std::vector<AxisBc> axes;
  std::vector<int> seams;
  for (const auto& t : per_axis) {
    axes.push_back(t.kind);
    seams.push_back(t.seam);
  }
  BoundaryCondition bc(axes, seams);
  for (const Site& g : ghost_sites(box, bc)) {
    // a ghost sits outside exactly one face, which identifies its axis
    for (int a = 0; a < box.dim(); ++a) {
      const int local = g[a] - box.origin()[a];
      if (local < 0 || local >= box.extent(a)) bc.ghosts_[g] = per_axis[a].ghost;
    }
  }
  return bc;
}

std::vector<bool> BoundaryCondition::wrap_flags() const {
  std::vector<bool> w;
  for (AxisBc b : axes_) w.push_back(b == AxisBc::Periodic || b == AxisBc::Antiperiodic);
  return w;
}

bool BoundaryCondition::has_fixed() const {
  return std::any_of(axes_.begin(), axes_.end(), [](AxisBc b) { return b == AxisBc::Fixed; });
}

std::string BoundaryCondition::describe() const {
  std::ostringstream os;
  for (int a = 0; a < dim(); ++a) {
    if (a) os << '/';
    os << to_string(axes_[a]);
    if (axes_[a] == AxisBc::Antiperiodic && seams_[a] >= 0) os << '@' << seams_[a];
    if (axes_[a] == AxisBc::Fixed) {
      std::set<int> spins;
      for (const auto& [g, s] : ghosts_) spins.insert(s);
      if (spins.size() == 1) os << (*spins.begin() > 0 ? '+' : '-');
      else os << '*';
    }
  }
  return os.str();
}

bool BoundaryCondition::operator==(const BoundaryCondition& other) const {
  return axes_ == other.axes_ && seams_ == other.seams_ && ghosts_ == other.ghosts_;
}

std::vector<Site> ghost_sites(const Region& box, const BoundaryCondition& bc) {
  std::vector<Site> out;
  for (int a = 0; a < box.dim() && a < bc.dim(); ++a) {
    if (bc.axis(a) != AxisBc::Fixed) continue;
    for (const Site& s : box.sites()) {
      const int local = s[a] - box.origin()[a];
      if (local == 0) {
        Site g = s;
        --g[a];
        out.push_back(g);
      }
      if (local == box.extent(a) - 1) {
        Site g = s;
        ++g[a];
        out.push_back(g);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

EdgeSet system_edges(const Region& box, const BoundaryCondition& bc) {
  if (bc.dim() != box.dim()) throw Error("boundary condition dimension does not match box");
  const Region wrapped = box.with_wrap(bc.wrap_flags());
  const EdgeSet inner = interior_edges(wrapped);
  std::vector<Edge> edges(inner.begin(), inner.end());
  for (int a = 0; a < box.dim(); ++a) {
    if (bc.axis(a) != AxisBc::Fixed) continue;
    for (const Site& s : box.sites()) {
      const int local = s[a] - box.origin()[a];
      if (local == 0) {
        Site g = s;
        --g[a];
        edges.push_back(Edge{g, s, a});
      }
      if (local == box.extent(a) - 1) {
        Site g = s;
        ++g[a];
        edges.push_back(Edge{s, g, a});
      }
    }
  }
  return EdgeSet(wrapped, std::move(edges));
}

EdgeSet universe_edges(const Region& box, std::span<const BoundaryCondition> bcs) {
  if (bcs.empty()) return interior_edges(box.with_wrap(std::vector<bool>(box.dim(), false)));
  EdgeSet u = system_edges(box, bcs[0]);
  for (std::size_t i = 1; i < bcs.size(); ++i) u = u.united_with(system_edges(box, bcs[i]));
  return EdgeSet(box.with_wrap(std::vector<bool>(box.dim(), false)), std::vector<Edge>(u.begin(), u.end()));
}

// ---------------------------------------------------------------------------
// GibbsSpec

GibbsSpec::GibbsSpec(Region box, CouplingConfig couplings, double beta, BoundaryCondition bc)
    : couplings_(std::move(couplings)), beta_(beta), bc_(std::move(bc)) {
  if (bc_.dim() != box.dim()) throw Error("boundary condition dimension does not match box");
  if (!std::isfinite(beta_) || beta_ < 0) throw Error("inverse temperature must be finite and >= 0");
  box_ = box.with_wrap(bc_.wrap_flags());
  for (int a = 0; a < box_.dim(); ++a) {
    const int seam = bc_.seam(a);
    if (seam < -1 || seam >= box_.extent(a)) throw Error("seam layer outside the box");
  }
  const auto ghosts = ghost_sites(box_, bc_);
  if (ghosts.size() != bc_.ghosts().size()) {
    throw Error("fixed boundary spins must cover exactly the ghost sites of the box");
  }
  for (const Site& g : ghosts) {
    if (!bc_.ghosts().contains(g)) {
      throw Error("fixed boundary spins must cover exactly the ghost sites of the box");
    }
  }
  system_edges_ = system_edges(box_, bc_);
  for (const Edge& e : system_edges_) {
    if (!couplings_.edges().contains(e)) {
      throw LookupError("coupling configuration lacks edge " + to_string(e, box_.dim()) +
                        " required by bc " + bc_.describe());
    }
  }
}

GibbsSpec GibbsSpec::with_couplings(CouplingConfig J) const {
  GibbsSpec copy = *this;
  if (!(J.edges() == couplings_.edges())) {
    for (const Edge& e : system_edges_) {
      if (!J.edges().contains(e)) throw LookupError("coupling configuration lacks a system edge");
    }
  }
  copy.couplings_ = std::move(J);
  return copy;
}

GibbsSpec GibbsSpec::with_beta(double beta) const {
  if (!std::isfinite(beta) || beta < 0) throw Error("inverse temperature must be finite and >= 0");
  GibbsSpec copy = *this;
  copy.beta_ = beta;
  return copy;
}

// ---------------------------------------------------------------------------
// SpinConfig and energy

SpinConfig::SpinConfig(Region region, std::vector<std::int8_t> spins)
    : region_(std::move(region)), spins_(std::move(spins)) {
  if (static_cast<std::int64_t>(spins_.size()) != region_.site_count()) {
    throw CoverageError("spin configuration must cover every site of its region");
  }
  for (auto s : spins_) {
    if (s != 1 && s != -1) throw Error("spins must be +1 or -1");
  }
}

SpinConfig SpinConfig::uniform(Region region, int spin) {
  const auto n = static_cast<std::size_t>(region.site_count());
  return SpinConfig(std::move(region), std::vector<std::int8_t>(n, static_cast<std::int8_t>(spin)));
}

int SpinConfig::operator()(const Site& s) const {
  if (!region_.contains(s)) throw CoverageError("no spin at site " + to_string(s, region_.dim()));
  return spins_[static_cast<std::size_t>(region_.index_of(s))];
}

double energy(const SpinConfig& sigma, const CouplingConfig& J, const EdgeSet& edges) {
  double h = 0.0;
  for (const Edge& e : edges) h -= J.at(e) * sigma(e.x) * sigma(e.y);
  return h;
}

// ---------------------------------------------------------------------------
// Compilation to the solver representation

namespace detail {

int seam_sign(const GibbsSpec& spec, const Edge& e) {
  const Region& box = spec.box();
  const BoundaryCondition& bc = spec.bc();
  if (e.axis >= bc.dim() || bc.axis(e.axis) != AxisBc::Antiperiodic) return 1;
  const int seam = bc.seam(e.axis) < 0 ? box.extent(e.axis) - 1 : bc.seam(e.axis);
  return e.x[e.axis] - box.origin()[e.axis] == seam ? -1 : 1;
}

SpinSystem compile(const GibbsSpec& spec) {
  SpinSystem sys;
  sys.box = spec.box();
  sys.n = static_cast<int>(spec.box().site_count());
  sys.beta = spec.beta();
  const Region& box = spec.box();
  const BoundaryCondition& bc = spec.bc();
  const EdgeSet& edges = spec.edges();
  const CouplingConfig& J = spec.couplings();
  for (const Edge& e : edges) {
    const double value = J.at(e);
    const bool in_x = box.contains(e.x);
    const bool in_y = box.contains(e.y);
    if (in_x && in_y) {
      const double c = seam_sign(spec, e) * value;
      sys.bonds.push_back(Bond{static_cast<int>(box.index_of(e.x)), static_cast<int>(box.index_of(e.y)), c,
                               e.axis, e.wraps()});
      sys.bond_edges.push_back(e);
    } else {
      const Site& inside = in_x ? e.x : e.y;
      const Site& ghost = in_x ? e.y : e.x;
      sys.fields.push_back(
          Field{static_cast<int>(box.index_of(inside)), value, bc.ghosts().at(ghost), e.axis});
      sys.field_edges.push_back(e);
    }
  }
  return sys;
}

std::optional<TermRef> find_term(const SpinSystem& sys, const Edge& e) {
  for (std::size_t i = 0; i < sys.bond_edges.size(); ++i) {
    if (sys.bond_edges[i] == e) return TermRef{false, i};
  }
  for (std::size_t i = 0; i < sys.field_edges.size(); ++i) {
    if (sys.field_edges[i] == e) return TermRef{true, i};
  }
  return std::nullopt;
}

TermRef ensure_term(SpinSystem& sys, const Edge& e) {
  if (auto t = find_term(sys, e)) return *t;
  const Region& box = sys.box;
  const int dim = box.dim();
  if (e.axis < 0 || e.axis >= dim || !box.contains(e.x) || !box.contains(e.y)) {
    throw ContainmentError("edge " + to_string(e, dim) + " not inside the box");
  }
  bool neighbours = true;
  for (int a = 0; a < dim; ++a) {
    if (a == e.axis) continue;
    neighbours = neighbours && e.x[a] == e.y[a];
  }
  const int lx = e.x[e.axis] - box.origin()[e.axis];
  const int ly = e.y[e.axis] - box.origin()[e.axis];
  const int E = box.extent(e.axis);
  neighbours = neighbours && (ly == lx + 1 || (lx == E - 1 && ly == 0 && E >= 2 && box.wraps(e.axis)));
  if (!neighbours) throw ContainmentError("edge " + to_string(e, dim) + " is not a nearest-neighbour pair");
  sys.bonds.push_back(Bond{static_cast<int>(box.index_of(e.x)), static_cast<int>(box.index_of(e.y)), 0.0, e.axis,
                           e.wraps()});
  sys.bond_edges.push_back(e);
  return TermRef{false, sys.bonds.size() - 1};
}

TermRef add_site_term(SpinSystem& sys, const Site& x) {
  if (!sys.box.contains(x)) throw ContainmentError("site " + to_string(x, sys.box.dim()) + " not inside the box");
  sys.fields.push_back(Field{static_cast<int>(sys.box.index_of(x)), 0.0, 1, 0});
  sys.field_edges.push_back(Edge{x, x, 0});
  return TermRef{true, sys.fields.size() - 1};
}

}  // namespace detail

}  // namespace eaglass
