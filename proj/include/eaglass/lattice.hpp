#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace eaglass {

inline constexpr int kMaxDim = 4;

// Integer lattice coordinates. Components beyond the region dimension are
// always zero, so comparisons and hashing ignore the dimension.
using Site = std::array<int, kMaxDim>;

std::string to_string(const Site& s, int dim);

struct SiteHash {
  std::size_t operator()(const Site& s) const noexcept;
};

// Lexicographic site order: first coordinate most significant.
inline bool site_less(const Site& a, const Site& b) { return a < b; }

/// A hypercubic box with per-axis extent and wrap flag.
///
/// Sites are the integer tuples origin + [0, extent) on each axis. A region
/// used as the ambient lattice normally has origin zero; windows and blocks
/// carry the offset at which they sit inside their ambient region.
class Region {
 public:
  Region() = default;
  Region(std::vector<int> extents, std::vector<bool> wrap = {}, Site origin = {});

  static Region open_box(std::vector<int> extents);
  static Region torus(std::vector<int> extents);

  int dim() const { return static_cast<int>(extents_.size()); }
  int extent(int axis) const { return extents_.at(axis); }
  bool wraps(int axis) const { return wrap_.at(axis); }
  const std::vector<int>& extents() const { return extents_; }
  const std::vector<bool>& wrap_flags() const { return wrap_; }
  const Site& origin() const { return origin_; }
  bool fully_wrapped() const;

  std::int64_t site_count() const;
  bool contains(const Site& s) const;

  // Rank of a contained site in lexicographic order.
  std::int64_t index_of(const Site& s) const;
  Site site_at(std::int64_t index) const;
  std::vector<Site> sites() const;

  Region with_wrap(std::vector<bool> wrap) const;
  Region with_origin(Site origin) const;

  // Same sites (origin and extents), wrap flags ignored.
  bool same_box(const Region& other) const;
  bool operator==(const Region& other) const = default;

 private:
  std::vector<int> extents_;
  std::vector<bool> wrap_;
  Site origin_{};
};

/// Nearest-neighbour edge from x to y = x + unit(axis).
///
/// On a wrapped axis y is reduced modulo the extent, so a wrap edge has
/// y[axis] < x[axis]. Identity is the full (x, y, axis) triple: on a
/// two-site wrapped axis the direct edge and the wrap edge join the same
/// pair of sites and remain distinct.
struct Edge {
  Site x{};
  Site y{};
  int axis = 0;

  bool wraps() const { return y[axis] < x[axis]; }
  bool operator==(const Edge& other) const = default;
};

std::string to_string(const Edge& e, int dim);

struct EdgeHash {
  std::size_t operator()(const Edge& e) const noexcept;
};

// Edge order by originating vertex; at the same vertex higher axes come
// first, so in d = 2 the vertical edge precedes the horizontal one.
bool edge_less(const Edge& a, const Edge& b);

/// Immutable, canonically ordered list of distinct edges. Copies share storage.
class EdgeSet {
 public:
  EdgeSet();
  // Sorts into canonical order; throws Error on duplicates.
  EdgeSet(Region region, std::vector<Edge> edges);

  const Region& region() const { return impl_->region; }
  std::size_t size() const { return impl_->edges.size(); }
  bool empty() const { return impl_->edges.empty(); }
  const Edge& operator[](std::size_t i) const { return impl_->edges[i]; }
  std::span<const Edge> edges() const { return impl_->edges; }
  auto begin() const { return impl_->edges.begin(); }
  auto end() const { return impl_->edges.end(); }

  std::optional<std::size_t> index_of(const Edge& e) const;
  bool contains(const Edge& e) const { return index_of(e).has_value(); }

  EdgeSet united_with(const EdgeSet& other) const;
  bool operator==(const EdgeSet& other) const;

 private:
  struct Impl {
    Region region;
    std::vector<Edge> edges;
    std::unordered_map<Edge, std::size_t, EdgeHash> index;
  };
  std::shared_ptr<const Impl> impl_;
};

struct BlockPartition {
  Region parent;
  int side = 0;
  std::vector<Region> blocks;
};

// E(region): edges with both ends in the region, honouring its wrap flags.
EdgeSet interior_edges(const Region& region);

// Edges of the ambient lattice with exactly one endpoint inside `inner`.
EdgeSet boundary_edges(const Region& inner, const Region& ambient);

Site translate(const Site& s, const Site& shift, const Region& ambient);
Edge translate(const Edge& e, const Site& shift, const Region& ambient);
Region translate(const Region& r, const Site& shift, const Region& ambient);

BlockPartition block_partition(const Region& region, int block_side);

}  // namespace eaglass
