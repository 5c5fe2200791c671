#include "blockreduce/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <unordered_set>

#include "blockreduce/error.hpp"

namespace blockreduce {

void DelayModel::validate() const {
  switch (kind) {
    case Kind::constant:
      if (!(mean > 0.0)) throw Error(ErrorKind::config_invalid, "constant link delay must be positive");
      break;
    case Kind::lognormal:
      if (!(mean > 0.0) || !(sigma >= 0.0)) {
        throw Error(ErrorKind::config_invalid, "lognormal delay needs mean > 0 and sigma >= 0");
      }
      break;
    case Kind::latent_position:
      if (dimensions < 1 || !(base > 0.0) || !(scale >= 0.0)) {
        throw Error(ErrorKind::config_invalid, "latent-position delay needs dimensions >= 1, base > 0, scale >= 0");
      }
      break;
  }
}

std::string to_string(DelayModel::Kind kind) {
  switch (kind) {
    case DelayModel::Kind::constant: return "constant";
    case DelayModel::Kind::lognormal: return "lognormal";
    case DelayModel::Kind::latent_position: return "latent-position";
  }
  return "unknown";
}

DelayModel::Kind parse_delay_kind(const std::string& text) {
  if (text == "constant") return DelayModel::Kind::constant;
  if (text == "lognormal") return DelayModel::Kind::lognormal;
  if (text == "latent-position") return DelayModel::Kind::latent_position;
  throw Error(ErrorKind::config_invalid, "unknown delay model '" + text + "'");
}

std::size_t OverlayGraph::edge_count() const {
  std::size_t deg = 0;
  for (const auto& a : adjacency) deg += a.size();
  return deg / 2;
}

double OverlayGraph::mean_link_delay() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& a : adjacency) {
    for (const auto& [v, w] : a) {
      sum += w;
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

bool OverlayGraph::is_connected() const {
  if (nodes.size() <= 1) return true;
  std::vector<char> seen(nodes.size(), 0);
  std::vector<std::uint32_t> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (const auto& [v, w] : adjacency[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == nodes.size();
}

namespace {

double draw_delay(const DelayModel& model, std::mt19937_64& rng, const Position* a, const Position* b) {
  switch (model.kind) {
    case DelayModel::Kind::constant:
      return model.mean;
    case DelayModel::Kind::lognormal: {
      const double mu = std::log(model.mean) - 0.5 * model.sigma * model.sigma;
      return std::lognormal_distribution<double>(mu, model.sigma)(rng);
    }
    case DelayModel::Kind::latent_position: {
      double d2 = 0.0;
      for (std::size_t k = 0; k < a->size(); ++k) d2 += ((*a)[k] - (*b)[k]) * ((*a)[k] - (*b)[k]);
      return model.base + model.scale * std::sqrt(d2);
    }
  }
  return model.mean;
}

Position random_position(int dimensions, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Position p(static_cast<std::size_t>(dimensions));
  for (auto& x : p) x = u(rng);
  return p;
}

// Steger-Wormald pairing: repeatedly join two random free stubs of distinct,
// not yet adjacent nodes. Returns false when the process gets stuck.
bool pair_stubs(std::size_t n, int d, std::mt19937_64& rng, std::vector<std::vector<std::uint32_t>>& adj) {
  adj.assign(n, {});
  std::vector<std::uint32_t> stubs;
  stubs.reserve(n * static_cast<std::size_t>(d));
  for (std::uint32_t v = 0; v < n; ++v) {
    for (int k = 0; k < d; ++k) stubs.push_back(v);
  }
  std::unordered_set<std::uint64_t> edges;
  auto key = [](std::uint32_t a, std::uint32_t b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
  };
  while (!stubs.empty()) {
    bool paired = false;
    const std::size_t budget = 64 + 8 * stubs.size();
    for (std::size_t t = 0; t < budget && !paired; ++t) {
      std::uniform_int_distribution<std::size_t> pick(0, stubs.size() - 1);
      std::size_t i = pick(rng);
      std::size_t j = pick(rng);
      if (i == j) continue;
      const auto u = stubs[i];
      const auto v = stubs[j];
      if (u == v || edges.count(key(u, v))) continue;
      edges.insert(key(u, v));
      adj[u].push_back(v);
      adj[v].push_back(u);
      if (i < j) std::swap(i, j);
      stubs[i] = stubs.back();
      stubs.pop_back();
      stubs[j] = stubs.back();
      stubs.pop_back();
      paired = true;
    }
    if (!paired) {
      // Either unlucky or no suitable pair left; check exhaustively.
      bool any = false;
      for (std::size_t i = 0; i < stubs.size() && !any; ++i) {
        for (std::size_t j = i + 1; j < stubs.size() && !any; ++j) {
          any = stubs[i] != stubs[j] && !edges.count(key(stubs[i], stubs[j]));
        }
      }
      if (!any) return false;
    }
  }
  return true;
}

}  // namespace

OverlayGraph generate_overlay(std::size_t n, int d, const DelayModel& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return generate_overlay(n, d, model, rng);
}

OverlayGraph generate_overlay(std::size_t n, int d, const DelayModel& model, std::mt19937_64& rng,
                              const std::vector<Position>* positions) {
  model.validate();
  if (d < 1 || n <= static_cast<std::size_t>(d) || (n * static_cast<std::size_t>(d)) % 2 != 0) {
    throw Error(ErrorKind::infeasible_degree, "no " + std::to_string(d) + "-regular graph on " +
                                                  std::to_string(n) + " nodes");
  }
  std::vector<Position> drawn;
  if (model.kind == DelayModel::Kind::latent_position) {
    if (!positions) {
      for (std::size_t i = 0; i < n; ++i) drawn.push_back(random_position(model.dimensions, rng));
      positions = &drawn;
    } else if (positions->size() != n) {
      throw Error(ErrorKind::config_invalid, "one latent position per node required");
    }
  }

  std::vector<std::vector<std::uint32_t>> adj;
  bool ok = false;
  if (static_cast<std::size_t>(d) == n - 1) {
    adj.assign(n, {});
    for (std::uint32_t u = 0; u < n; ++u) {
      for (std::uint32_t v = 0; v < n; ++v) {
        if (u != v) adj[u].push_back(v);
      }
    }
    ok = true;
  } else {
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
      if (!pair_stubs(n, d, rng, adj)) continue;
      OverlayGraph probe;
      probe.nodes.resize(n);
      probe.adjacency.resize(n);
      for (std::uint32_t u = 0; u < n; ++u) {
        for (auto v : adj[u]) probe.adjacency[u].emplace_back(v, 1.0);
      }
      ok = probe.is_connected();
    }
  }
  if (!ok) {
    throw Error(ErrorKind::disconnected_overlay, "no connected overlay after 100 attempts");
  }

  OverlayGraph g;
  g.nodes.resize(n);
  std::iota(g.nodes.begin(), g.nodes.end(), 0u);
  g.adjacency.resize(n);
  for (std::uint32_t u = 0; u < n; ++u) {
    std::sort(adj[u].begin(), adj[u].end());
    for (auto v : adj[u]) {
      if (v < u) continue;
      const Position* pu = positions ? &(*positions)[u] : nullptr;
      const Position* pv = positions ? &(*positions)[v] : nullptr;
      const double w = draw_delay(model, rng, pu, pv);
      g.adjacency[u].emplace_back(v, w);
      g.adjacency[v].emplace_back(u, w);
    }
  }
  for (auto& a : g.adjacency) std::sort(a.begin(), a.end());
  return g;
}

std::vector<double> propagate(const OverlayGraph& graph, std::uint32_t source) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(graph.size(), inf);
  using Item = std::pair<double, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist.at(source) = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [t, u] = queue.top();
    queue.pop();
    if (t > dist[u]) continue;
    for (const auto& [v, w] : graph.adjacency[u]) {
      if (t + w < dist[v]) {
        dist[v] = t + w;
        queue.emplace(dist[v], v);
      }
    }
  }
  return dist;
}

double broadcast_delay(const OverlayGraph& graph, std::uint32_t source) {
  const auto arrival = propagate(graph, source);
  return *std::max_element(arrival.begin(), arrival.end());
}

std::string to_string(PartitionPolicy policy) {
  return policy == PartitionPolicy::uniform ? "uniform" : "latency-affinity";
}

PartitionPolicy parse_partition_policy(const std::string& text) {
  if (text == "uniform") return PartitionPolicy::uniform;
  if (text == "latency-affinity") return PartitionPolicy::latency_affinity;
  throw Error(ErrorKind::config_invalid, "unknown partition policy '" + text + "'");
}

std::vector<std::uint32_t> SubnetworkAssignment::members(const ChainPath& chain) const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t v = 0; v < membership.size(); ++v) {
    if (chain.is_prefix_of(membership[v])) out.push_back(v);
  }
  return out;
}

SubnetworkAssignment partition_network(std::size_t nodes, const HierarchyConfig& hierarchy,
                                       PartitionPolicy policy, int degree, const DelayModel& model,
                                       std::uint64_t seed) {
  hierarchy.validate();
  model.validate();
  const auto leaves = hierarchy.leaves();
  if (nodes < leaves.size()) {
    throw Error(ErrorKind::too_few_nodes, std::to_string(nodes) + " nodes cannot cover " +
                                              std::to_string(leaves.size()) + " leaves");
  }
  std::mt19937_64 rng(seed);
  SubnetworkAssignment out;
  const int dims = model.kind == DelayModel::Kind::latent_position ? model.dimensions : 2;
  for (std::size_t i = 0; i < nodes; ++i) out.positions.push_back(random_position(dims, rng));
  out.membership.assign(nodes, ChainPath::root());

  std::vector<std::uint32_t> all(nodes);
  std::iota(all.begin(), all.end(), 0u);
  if (policy == PartitionPolicy::uniform) std::shuffle(all.begin(), all.end(), rng);

  // Recursive split: at every order the current group is cut into
  // `branching` near-equal parts; latency affinity first sorts the group
  // along one coordinate axis so each part is spatially compact.
  std::function<void(std::vector<std::uint32_t>, const ChainPath&)> split =
      [&](std::vector<std::uint32_t> group, const ChainPath& chain) {
        if (chain.order() == hierarchy.num_orders) {
          for (auto v : group) out.membership[v] = chain;
          return;
        }
        if (policy == PartitionPolicy::latency_affinity) {
          const auto axis = static_cast<std::size_t>((chain.order() - 1) % dims);
          std::stable_sort(group.begin(), group.end(), [&](std::uint32_t a, std::uint32_t b) {
            return out.positions[a][axis] < out.positions[b][axis];
          });
        }
        const std::uint32_t parts = hierarchy.branching[static_cast<std::size_t>(chain.order() - 1)];
        std::size_t begin = 0;
        for (std::uint32_t i = 0; i < parts; ++i) {
          const std::size_t end = group.size() * (i + 1) / parts;
          split(std::vector<std::uint32_t>(group.begin() + static_cast<std::ptrdiff_t>(begin),
                                           group.begin() + static_cast<std::ptrdiff_t>(end)),
                chain.child(i + 1));
          begin = end;
        }
      };
  split(all, ChainPath::root());

  for (const auto& chain : hierarchy.all_chains()) {
    const auto members = out.members(chain);
    if (members.empty()) {
      throw Error(ErrorKind::too_few_nodes, "sub-network " + chain.to_string() + " has no nodes");
    }
    std::vector<Position> pos;
    for (auto v : members) pos.push_back(out.positions[v]);
    OverlayGraph g;
    if (members.size() == 1) {
      g.adjacency.resize(1);
    } else {
      const int d = members.size() <= static_cast<std::size_t>(degree) ? static_cast<int>(members.size()) - 1
                                                                        : degree;
      g = generate_overlay(members.size(), d, model, rng, &pos);
    }
    g.nodes = members;
    out.overlays.emplace(chain, std::move(g));
  }
  return out;
}

}  // namespace blockreduce
