#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "blockreduce/hierarchy.hpp"

namespace blockreduce {

/// Per-link latency distribution.
struct DelayModel {
  enum class Kind { constant, lognormal, latent_position };
  Kind kind = Kind::constant;
  double mean = 1.0;   // constant value, or mean of the lognormal
  double sigma = 0.5;  // lognormal shape
  int dimensions = 2;  // latent-position: coordinates in the unit cube
  double base = 0.1;   // latent-position: delay = base + scale * distance
  double scale = 1.0;

  static DelayModel constant_delay(double delta) { return {Kind::constant, delta}; }
  static DelayModel lognormal_delay(double mean, double sigma) { return {Kind::lognormal, mean, sigma}; }
  static DelayModel latent(int dimensions, double base, double scale) {
    return {Kind::latent_position, 0.0, 0.0, dimensions, base, scale};
  }

  /// Throws Error(config_invalid) on non-positive parameters.
  void validate() const;
};

std::string to_string(DelayModel::Kind kind);
DelayModel::Kind parse_delay_kind(const std::string& text);

using Position = std::vector<double>;

/// Undirected overlay on a set of nodes. `nodes[i]` is the global id of local
/// vertex i; adjacency lists hold (local neighbour, link delay).
struct OverlayGraph {
  std::vector<std::uint32_t> nodes;
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adjacency;

  std::size_t size() const noexcept { return nodes.size(); }
  std::size_t edge_count() const;
  double mean_link_delay() const;
  bool is_connected() const;
};

/// Connected random d-regular graph on n nodes (complete graph when
/// d = n - 1) with link delays drawn from `model`. Latent-position delays use
/// `positions` (one per node) when given, otherwise fresh uniform positions.
OverlayGraph generate_overlay(std::size_t n, int d, const DelayModel& model, std::uint64_t seed);
OverlayGraph generate_overlay(std::size_t n, int d, const DelayModel& model, std::mt19937_64& rng,
                              const std::vector<Position>* positions = nullptr);

/// Flooding arrival time at every local vertex from local vertex `source`
/// (shortest-path delay).
std::vector<double> propagate(const OverlayGraph& graph, std::uint32_t source);

/// Largest arrival time from `source`.
double broadcast_delay(const OverlayGraph& graph, std::uint32_t source);

enum class PartitionPolicy { uniform, latency_affinity };

std::string to_string(PartitionPolicy policy);
PartitionPolicy parse_partition_policy(const std::string& text);

/// Which leaf each node mines, and one overlay per chain spanning the nodes
/// whose slice contains that chain.
struct SubnetworkAssignment {
  std::vector<ChainPath> membership;  // node -> leaf
  std::vector<Position> positions;    // node -> latent coordinates
  std::map<ChainPath, OverlayGraph> overlays;

  std::vector<std::uint32_t> members(const ChainPath& chain) const;
};

/// Splits `nodes` nodes across the leaves of `hierarchy` and builds the
/// overlays. Sub-networks with at most `degree` members use a complete graph.
SubnetworkAssignment partition_network(std::size_t nodes, const HierarchyConfig& hierarchy,
                                       PartitionPolicy policy, int degree, const DelayModel& model,
                                       std::uint64_t seed);

}  // namespace blockreduce
