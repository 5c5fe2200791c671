#include "blockreduce/hierarchy.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "blockreduce/error.hpp"

namespace blockreduce {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::root_has_no_parent: return "root-has-no-parent";
    case ErrorKind::not_a_leaf: return "not-a-leaf";
    case ErrorKind::invalid_path: return "invalid-path";
    case ErrorKind::invalid_hierarchy: return "invalid-hierarchy";
    case ErrorKind::invalid_schedule: return "invalid-schedule";
    case ErrorKind::sample_meets_no_threshold: return "sample-meets-no-threshold";
    case ErrorKind::order_out_of_range: return "order-out-of-range";
    case ErrorKind::same_origin_destination: return "same-origin-destination";
    case ErrorKind::infeasible_degree: return "infeasible-degree";
    case ErrorKind::disconnected_overlay: return "disconnected-overlay";
    case ErrorKind::too_few_nodes: return "too-few-nodes";
    case ErrorKind::domain_error: return "domain-error";
    case ErrorKind::q_too_large: return "q-too-large";
    case ErrorKind::config_invalid: return "config-invalid";
    case ErrorKind::config_parse: return "config-parse";
    case ErrorKind::scenario_invalid: return "scenario-invalid";
    case ErrorKind::invariant_violation: return "invariant-violation";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

namespace {

void check_indices(const std::vector<std::uint32_t>& indices) {
  if (indices.empty() || indices.front() != 1) {
    throw Error(ErrorKind::invalid_path, "chain path must start with the root index 1");
  }
  if (std::any_of(indices.begin(), indices.end(), [](std::uint32_t i) { return i == 0; })) {
    throw Error(ErrorKind::invalid_path, "chain path indices are 1-based");
  }
}

}  // namespace

ChainPath::ChainPath(std::initializer_list<std::uint32_t> indices) : indices_(indices) {
  check_indices(indices_);
}

ChainPath::ChainPath(std::vector<std::uint32_t> indices) : indices_(std::move(indices)) {
  check_indices(indices_);
}

ChainPath ChainPath::parse(std::string_view text) {
  std::vector<std::uint32_t> out;
  std::size_t i = 0;
  auto skip = [&] {
    while (i < text.size() && (std::isspace(static_cast<unsigned char>(text[i])) ||
                               text[i] == '{' || text[i] == '}')) {
      ++i;
    }
  };
  skip();
  while (i < text.size()) {
    std::uint32_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + text.size(), value);
    if (ec != std::errc{}) {
      throw Error(ErrorKind::invalid_path, "cannot parse chain path '" + std::string(text) + "'");
    }
    out.push_back(value);
    i = static_cast<std::size_t>(ptr - text.data());
    skip();
    if (i < text.size()) {
      if (text[i] != ',' && text[i] != '.') {
        throw Error(ErrorKind::invalid_path, "cannot parse chain path '" + std::string(text) + "'");
      }
      ++i;
      skip();
    }
  }
  return ChainPath(std::move(out));
}

bool ChainPath::is_prefix_of(const ChainPath& other) const noexcept {
  return indices_.size() <= other.indices_.size() &&
         std::equal(indices_.begin(), indices_.end(), other.indices_.begin());
}

ChainPath ChainPath::prefix(int order) const {
  if (order < 1 || order > this->order()) {
    throw Error(ErrorKind::order_out_of_range,
                "prefix order " + std::to_string(order) + " outside path " + to_string());
  }
  return ChainPath(std::vector<std::uint32_t>(indices_.begin(), indices_.begin() + order));
}

ChainPath ChainPath::child(std::uint32_t index) const {
  auto next = indices_;
  next.push_back(index);
  return ChainPath(std::move(next));
}

std::string ChainPath::to_string() const {
  std::string s = "{";
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    if (k) s += ',';
    s += std::to_string(indices_[k]);
  }
  s += '}';
  return s;
}

std::ostream& operator<<(std::ostream& os, const ChainPath& path) { return os << path.to_string(); }

void HierarchyConfig::validate() const {
  if (num_orders < 1) {
    throw Error(ErrorKind::invalid_hierarchy, "a hierarchy needs at least one order");
  }
  if (branching.size() != static_cast<std::size_t>(num_orders - 1)) {
    throw Error(ErrorKind::invalid_hierarchy,
                "expected " + std::to_string(num_orders - 1) + " branching factors, got " +
                    std::to_string(branching.size()));
  }
  for (auto b : branching) {
    if (b < 1) throw Error(ErrorKind::invalid_hierarchy, "branching factors must be >= 1");
  }
}

bool HierarchyConfig::contains(const ChainPath& path) const noexcept {
  if (path.order() > num_orders) return false;
  for (int k = 1; k < path.order(); ++k) {
    if (path[k] > branching[k - 1]) return false;
  }
  return true;
}

std::size_t HierarchyConfig::chains_at_order(int order) const {
  if (order < 1 || order > num_orders) {
    throw Error(ErrorKind::order_out_of_range, "order " + std::to_string(order) + " outside hierarchy");
  }
  std::size_t q = 1;
  for (int k = 1; k < order; ++k) q *= branching[k - 1];
  return q;
}

std::vector<ChainPath> HierarchyConfig::chains_of_order(int order) const {
  if (order < 1 || order > num_orders) {
    throw Error(ErrorKind::order_out_of_range, "order " + std::to_string(order) + " outside hierarchy");
  }
  std::vector<ChainPath> level{ChainPath::root()};
  for (int k = 1; k < order; ++k) {
    std::vector<ChainPath> next;
    next.reserve(level.size() * branching[k - 1]);
    for (const auto& p : level) {
      for (std::uint32_t c = 1; c <= branching[k - 1]; ++c) next.push_back(p.child(c));
    }
    level = std::move(next);
  }
  return level;
}

std::vector<ChainPath> HierarchyConfig::all_chains() const {
  std::vector<ChainPath> out;
  for (int r = 1; r <= num_orders; ++r) {
    auto level = chains_of_order(r);
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

std::size_t HierarchyConfig::index_of(const ChainPath& path) const {
  if (!contains(path)) {
    throw Error(ErrorKind::invalid_path, path.to_string() + " is not part of the hierarchy");
  }
  std::size_t base = 0;
  for (int r = 1; r < path.order(); ++r) base += chains_at_order(r);
  std::size_t offset = 0;
  for (int k = 1; k < path.order(); ++k) offset = offset * branching[k - 1] + (path[k] - 1);
  return base + offset;
}

ChainPath parent(const ChainPath& path) {
  if (path.is_root()) {
    throw Error(ErrorKind::root_has_no_parent, "the root chain {1} has no parent");
  }
  return path.prefix(path.order() - 1);
}

ChainPath common_ancestor(const ChainPath& a, const ChainPath& b) {
  const auto& x = a.indices();
  const auto& y = b.indices();
  std::size_t n = 0;
  while (n < x.size() && n < y.size() && x[n] == y[n]) ++n;
  return a.prefix(static_cast<int>(n));
}

std::vector<ChainPath> mining_slice(const ChainPath& leaf, const HierarchyConfig& config) {
  if (!config.contains(leaf)) {
    throw Error(ErrorKind::invalid_path, leaf.to_string() + " is not part of the hierarchy");
  }
  if (leaf.order() != config.num_orders) {
    throw Error(ErrorKind::not_a_leaf, leaf.to_string() + " is not a leaf of the hierarchy");
  }
  std::vector<ChainPath> slice;
  slice.reserve(static_cast<std::size_t>(leaf.order()));
  for (int r = 1; r <= leaf.order(); ++r) slice.push_back(leaf.prefix(r));
  return slice;
}

std::size_t ChainPathHash::operator()(const ChainPath& p) const noexcept {
  std::size_t h = 1469598103934665603ull;
  for (auto i : p.indices()) {
    h ^= i;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace blockreduce
