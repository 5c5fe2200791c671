#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace blockreduce {

/// Path from the root of the hierarchy tree to one sub-network, written
/// `{1,2,1}`. The first index is always 1 (the root); the length of the path
/// is the order of the chain it names.
class ChainPath {
 public:
  ChainPath() : indices_{1} {}
  ChainPath(std::initializer_list<std::uint32_t> indices);
  explicit ChainPath(std::vector<std::uint32_t> indices);

  static ChainPath root() { return ChainPath{}; }

  /// Parses `{1,2,1}` (braces optional, whitespace ignored).
  static ChainPath parse(std::string_view text);

  int order() const noexcept { return static_cast<int>(indices_.size()); }
  const std::vector<std::uint32_t>& indices() const noexcept { return indices_; }
  std::uint32_t operator[](std::size_t k) const { return indices_[k]; }

  bool is_root() const noexcept { return indices_.size() == 1; }

  /// True when `this` is an ancestor of `other` or equal to it.
  bool is_prefix_of(const ChainPath& other) const noexcept;

  /// The ancestor at `order` (1 ≤ order ≤ this->order()).
  ChainPath prefix(int order) const;

  ChainPath child(std::uint32_t index) const;

  std::string to_string() const;

  friend bool operator==(const ChainPath&, const ChainPath&) = default;
  // Lexicographic on the index sequence, which for paths of equal order is
  // the left-to-right order of the tree.
  friend std::strong_ordering operator<=>(const ChainPath& a, const ChainPath& b) {
    return a.indices_ <=> b.indices_;
  }

 private:
  std::vector<std::uint32_t> indices_;
};

std::ostream& operator<<(std::ostream& os, const ChainPath& path);

/// Shape of the hierarchy: `num_orders` levels, and for each order
/// r in [1, R-1] the number of children every order-r node has.
struct HierarchyConfig {
  int num_orders = 1;
  std::vector<std::uint32_t> branching;

  /// Throws Error(invalid_hierarchy) when R < 1, the branching list has the
  /// wrong length, or some factor is zero.
  void validate() const;

  bool contains(const ChainPath& path) const noexcept;

  /// Number of chains at `order` (q in the scaling analysis).
  std::size_t chains_at_order(int order) const;

  /// All chains at one order, left to right.
  std::vector<ChainPath> chains_of_order(int order) const;

  /// Every chain, root first, then order by order left to right.
  std::vector<ChainPath> all_chains() const;

  std::vector<ChainPath> leaves() const { return chains_of_order(num_orders); }

  /// Dense index of `path` within all_chains().
  std::size_t index_of(const ChainPath& path) const;
};

// Free-function forms of the path arithmetic.

ChainPath parent(const ChainPath& path);
inline int order(const ChainPath& path) noexcept { return path.order(); }
ChainPath common_ancestor(const ChainPath& a, const ChainPath& b);

/// Chains mined simultaneously by a miner working on `leaf`, root first.
std::vector<ChainPath> mining_slice(const ChainPath& leaf, const HierarchyConfig& config);

struct ChainPathHash {
  std::size_t operator()(const ChainPath& p) const noexcept;
};

}  // namespace blockreduce
