#include "eaglass/lattice.hpp"

#include <algorithm>
#include <sstream>

#include "eaglass/error.hpp"

namespace eaglass {

namespace {

std::size_t mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

int floor_mod(int a, int m) {
  int r = a % m;
  return r < 0 ? r + m : r;
}

}  // namespace

std::string to_string(const Site& s, int dim) {
  std::ostringstream os;
  os << '(';
  for (int a = 0; a < dim; ++a) {
    if (a) os << ',';
    os << s[a];
  }
  os << ')';
  return os.str();
}

std::size_t SiteHash::operator()(const Site& s) const noexcept {
  std::size_t h = 0;
  for (int c : s) h = mix(h, static_cast<std::size_t>(static_cast<std::uint32_t>(c)));
  return h;
}

std::size_t EdgeHash::operator()(const Edge& e) const noexcept {
  SiteHash sh;
  return mix(mix(sh(e.x), sh(e.y)), static_cast<std::size_t>(e.axis));
}

std::string to_string(const Edge& e, int dim) {
  return "{" + to_string(e.x, dim) + "," + to_string(e.y, dim) + "}";
}

bool edge_less(const Edge& a, const Edge& b) {
  if (a.x != b.x) return a.x < b.x;
  if (a.axis != b.axis) return a.axis > b.axis;
  return a.y < b.y;
}

// ---------------------------------------------------------------------------
// Region

Region::Region(std::vector<int> extents, std::vector<bool> wrap, Site origin)
    : extents_(std::move(extents)), wrap_(std::move(wrap)), origin_(origin) {
  if (extents_.empty() || static_cast<int>(extents_.size()) > kMaxDim) {
    throw Error("region dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  }
  for (int e : extents_) {
    if (e < 1) throw Error("region extents must be >= 1");
  }
  if (wrap_.empty()) wrap_.assign(extents_.size(), false);
  if (wrap_.size() != extents_.size()) throw Error("wrap flags must match region dimension");
  for (int a = dim(); a < kMaxDim; ++a) origin_[a] = 0;
}

Region Region::open_box(std::vector<int> extents) { return Region(std::move(extents)); }

Region Region::torus(std::vector<int> extents) {
  std::vector<bool> w(extents.size(), true);
  return Region(std::move(extents), std::move(w));
}

bool Region::fully_wrapped() const {
  return std::all_of(wrap_.begin(), wrap_.end(), [](bool w) { return w; });
}

std::int64_t Region::site_count() const {
  std::int64_t n = 1;
  for (int e : extents_) n *= e;
  return n;
}

bool Region::contains(const Site& s) const {
  for (int a = 0; a < dim(); ++a) {
    int c = s[a] - origin_[a];
    if (c < 0 || c >= extents_[a]) return false;
  }
  for (int a = dim(); a < kMaxDim; ++a) {
    if (s[a] != 0) return false;
  }
  return true;
}

std::int64_t Region::index_of(const Site& s) const {
  if (!contains(s)) throw ContainmentError("site " + to_string(s, dim()) + " outside region");
  std::int64_t idx = 0;
  for (int a = 0; a < dim(); ++a) idx = idx * extents_[a] + (s[a] - origin_[a]);
  return idx;
}

Site Region::site_at(std::int64_t index) const {
  Site s{};
  for (int a = dim() - 1; a >= 0; --a) {
    s[a] = origin_[a] + static_cast<int>(index % extents_[a]);
    index /= extents_[a];
  }
  return s;
}

std::vector<Site> Region::sites() const {
  std::vector<Site> out;
  out.reserve(static_cast<std::size_t>(site_count()));
  for (std::int64_t i = 0; i < site_count(); ++i) out.push_back(site_at(i));
  return out;
}

Region Region::with_wrap(std::vector<bool> wrap) const { return Region(extents_, std::move(wrap), origin_); }

Region Region::with_origin(Site origin) const { return Region(extents_, wrap_, origin); }

bool Region::same_box(const Region& other) const {
  return extents_ == other.extents_ && origin_ == other.origin_;
}

// ---------------------------------------------------------------------------
// EdgeSet

EdgeSet::EdgeSet() : impl_(std::make_shared<Impl>()) {}

EdgeSet::EdgeSet(Region region, std::vector<Edge> edges) {
  auto impl = std::make_shared<Impl>();
  impl->region = std::move(region);
  std::sort(edges.begin(), edges.end(), edge_less);
  impl->edges = std::move(edges);
  impl->index.reserve(impl->edges.size());
  for (std::size_t i = 0; i < impl->edges.size(); ++i) {
    if (!impl->index.emplace(impl->edges[i], i).second) {
      throw Error("duplicate edge " + to_string(impl->edges[i], impl->region.dim()));
    }
  }
  impl_ = std::move(impl);
}

std::optional<std::size_t> EdgeSet::index_of(const Edge& e) const {
  auto it = impl_->index.find(e);
  if (it == impl_->index.end()) return std::nullopt;
  return it->second;
}

EdgeSet EdgeSet::united_with(const EdgeSet& other) const {
  std::vector<Edge> all(begin(), end());
  for (const Edge& e : other) {
    if (!contains(e)) all.push_back(e);
  }
  return EdgeSet(region(), std::move(all));
}

bool EdgeSet::operator==(const EdgeSet& other) const {
  return impl_->edges == other.impl_->edges;
}

// ---------------------------------------------------------------------------
// Geometry operations

EdgeSet interior_edges(const Region& region) {
  std::vector<Edge> edges;
  for (const Site& s : region.sites()) {
    for (int a = 0; a < region.dim(); ++a) {
      const int local = s[a] - region.origin()[a];
      Site y = s;
      if (local + 1 < region.extent(a)) {
        y[a] = s[a] + 1;
      } else if (region.wraps(a) && region.extent(a) >= 2) {
        y[a] = region.origin()[a];
      } else {
        continue;
      }
      edges.push_back(Edge{s, y, a});
    }
  }
  return EdgeSet(region, std::move(edges));
}

namespace {

void require_contained(const Region& inner, const Region& ambient) {
  if (inner.dim() != ambient.dim()) throw ContainmentError("dimension mismatch between regions");
  for (int a = 0; a < inner.dim(); ++a) {
    const int lo = inner.origin()[a] - ambient.origin()[a];
    if (lo < 0 || lo + inner.extent(a) > ambient.extent(a)) {
      throw ContainmentError("inner region not contained in ambient region");
    }
  }
}

}  // namespace

EdgeSet boundary_edges(const Region& inner, const Region& ambient) {
  require_contained(inner, ambient);
  std::vector<Edge> out;
  for (const Edge& e : interior_edges(ambient)) {
    if (inner.contains(e.x) != inner.contains(e.y)) out.push_back(e);
  }
  return EdgeSet(ambient, std::move(out));
}

Site translate(const Site& s, const Site& shift, const Region& ambient) {
  if (!ambient.contains(s)) throw OutOfBoundsError("site outside ambient region");
  Site out{};
  for (int a = 0; a < ambient.dim(); ++a) {
    int local = s[a] + shift[a] - ambient.origin()[a];
    if (ambient.wraps(a)) {
      local = floor_mod(local, ambient.extent(a));
    } else if (local < 0 || local >= ambient.extent(a)) {
      throw OutOfBoundsError("translation leaves open region along axis " + std::to_string(a));
    }
    out[a] = ambient.origin()[a] + local;
  }
  return out;
}

Edge translate(const Edge& e, const Site& shift, const Region& ambient) {
  return Edge{translate(e.x, shift, ambient), translate(e.y, shift, ambient), e.axis};
}

Region translate(const Region& r, const Site& shift, const Region& ambient) {
  try {
    require_contained(r, ambient);
  } catch (const ContainmentError&) {
    throw OutOfBoundsError("region outside ambient region");
  }
  Site origin{};
  for (int a = 0; a < ambient.dim(); ++a) {
    int local = r.origin()[a] + shift[a] - ambient.origin()[a];
    const int E = ambient.extent(a);
    if (ambient.wraps(a)) {
      local = r.extent(a) == E ? 0 : floor_mod(local, E);
    }
    if (local < 0 || local + r.extent(a) > E) {
      throw OutOfBoundsError("translated region does not fit along axis " + std::to_string(a));
    }
    origin[a] = ambient.origin()[a] + local;
  }
  return r.with_origin(origin);
}

BlockPartition block_partition(const Region& region, int block_side) {
  if (block_side < 1) throw PartitionError("block side must be positive");
  std::vector<int> counts(region.dim());
  for (int a = 0; a < region.dim(); ++a) {
    if (region.extent(a) % block_side != 0) {
      throw PartitionError("block side " + std::to_string(block_side) + " does not divide extent " +
                           std::to_string(region.extent(a)));
    }
    counts[a] = region.extent(a) / block_side;
  }
  BlockPartition p{region, block_side, {}};
  const Region grid(counts);
  for (const Site& g : grid.sites()) {
    Site origin{};
    for (int a = 0; a < region.dim(); ++a) origin[a] = region.origin()[a] + g[a] * block_side;
    p.blocks.emplace_back(std::vector<int>(region.dim(), block_side), std::vector<bool>{}, origin);
  }
  return p;
}

}  // namespace eaglass
