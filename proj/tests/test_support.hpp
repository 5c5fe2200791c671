#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <vector>

#include "blockreduce/block.hpp"
#include "blockreduce/difficulty.hpp"
#include "blockreduce/forest.hpp"
#include "blockreduce/hierarchy.hpp"
#include "blockreduce/hlcr.hpp"

namespace blockreduce::testing {

/// Builds blocks by hand against a forest that tracks every chain, so tests
/// can lay out forks, coincident blocks and transaction bodies explicitly.
class BlockBuilder {
 public:
  BlockBuilder(HierarchyConfig hierarchy, DifficultySchedule schedule)
      : hierarchy_(std::move(hierarchy)),
        schedule_(std::move(schedule)),
        genesis_(make_genesis(hierarchy_)),
        full_(BlockForest::full(hierarchy_, schedule_, genesis_)) {}

  const HierarchyConfig& hierarchy() const { return hierarchy_; }
  const DifficultySchedule& schedule() const { return schedule_; }
  BlockPtr genesis() const { return genesis_; }
  const BlockForest& forest() const { return full_; }

  /// Block on `leaf` achieving `order`, with predecessor `preds[k]` at every
  /// order k from `order` to R (missing entries default to genesis). Exports
  /// are derived from the builder's forest. The block is also admitted there.
  BlockPtr make(const ChainPath& leaf, int order, std::map<int, BlockId> preds, double time,
                std::vector<std::vector<Transaction>> bodies = {}) {
    auto b = std::make_shared<Block>();
    b->id = next_id_++;
    b->leaf = leaf;
    b->achieved_order = order;
    b->found_time = time;
    const int R = hierarchy_.num_orders;
    for (int k = order; k <= R; ++k) {
      auto it = preds.find(k);
      b->predecessors.push_back(it == preds.end() ? genesis_id : it->second);
    }
    bodies.resize(static_cast<std::size_t>(R - order + 1));
    b->bodies = std::move(bodies);
    if (std::all_of(b->predecessors.begin(), b->predecessors.end(),
                    [&](BlockId p) { return full_.is_valid(p); })) {
      b->exports = compute_exports(full_, leaf, b->id, order, b->predecessors, b->bodies);
    }
    BlockPtr ptr = b;
    full_.admit(ptr, time);
    return ptr;
  }

  /// Block extending the current tip of every chain on `leaf`'s slice from
  /// `order` down, as an honest miner would.
  BlockPtr extend(const ChainPath& leaf, int order, double time,
                  std::vector<std::vector<Transaction>> bodies = {}) {
    auto [view, plans] = recompute_view(full_, genesis_view(full_));
    std::map<int, BlockId> preds;
    for (int k = order; k <= hierarchy_.num_orders; ++k) preds[k] = view.tip(leaf.prefix(k));
    return make(leaf, order, preds, time, std::move(bodies));
  }

 private:
  HierarchyConfig hierarchy_;
  DifficultySchedule schedule_;
  BlockPtr genesis_;
  BlockForest full_;
  BlockId next_id_ = 1;
};

/// Latest block in the `chain_idx` ancestry of `from` (itself included) that
/// also belongs to `member_of`.
inline BlockId latest_shared(const BlockForest& f, BlockId from, std::size_t chain_idx, const ChainPath& member_of) {
  BlockId cur = from;
  while (!f.block(cur).member_of(member_of)) cur = f.predecessor(cur, chain_idx);
  return cur;
}

struct RandomForest {
  HierarchyConfig hierarchy;
  DifficultySchedule schedule;
  BlockPtr genesis;
  std::vector<BlockPtr> blocks;     // generation order
  std::vector<double> arrival;      // receipt time per block, same order
  std::vector<std::size_t> delivery;  // indices into `blocks`, delivery order
};

/// Random block tree over a random hierarchy with at most `max_blocks`
/// blocks. Most blocks respect coincident linkage; a few pick arbitrary
/// predecessors so the forest also holds rejected blocks. Delivery order is a
/// perturbed generation order, so some blocks arrive before their
/// predecessors and are buffered.
inline RandomForest random_forest(std::uint64_t seed, std::size_t max_blocks) {
  std::mt19937_64 rng(seed);
  auto uniform_int = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  RandomForest out;
  const int R = static_cast<int>(uniform_int(1, 3));
  out.hierarchy.num_orders = R;
  std::vector<int> bits;
  for (int r = 1; r < R; ++r) out.hierarchy.branching.push_back(static_cast<std::uint32_t>(uniform_int(1, 3)));
  for (int r = 1; r <= R; ++r) bits.push_back(2 * (R - r));
  out.schedule = DifficultySchedule::from_leading_zero_bits(bits);
  out.genesis = make_genesis(out.hierarchy);

  BlockForest gen = BlockForest::full(out.hierarchy, out.schedule, out.genesis);
  const auto leaves = out.hierarchy.leaves();
  const std::size_t n = uniform_int(max_blocks / 4, max_blocks);
  double time = 0.0;
  for (BlockId id = 1; id <= n; ++id) {
    time += 0.1 + unit(rng);
    auto b = std::make_shared<Block>();
    b->id = id;
    b->leaf = leaves[uniform_int(0, leaves.size() - 1)];
    // Each harder order is a quarter as likely as the one below it.
    int order = R;
    while (order > 1 && unit(rng) < 0.25) --order;
    b->achieved_order = order;
    b->found_time = time;
    b->bodies.assign(static_cast<std::size_t>(R - order + 1), {});

    const bool arbitrary = unit(rng) < 0.05;
    auto pick = [&](const ChainPath& chain, auto&& accept) {
      const auto idx = *gen.tracked_index(chain);
      std::vector<BlockId> options;
      for (BlockId m : gen.members(idx)) {
        if (gen.is_valid(m) && accept(m, idx)) options.push_back(m);
      }
      // Prefer recent blocks so forks stay short and chains grow.
      const std::size_t window = std::min<std::size_t>(options.size(), 6);
      return options[options.size() - 1 - uniform_int(0, window - 1)];
    };
    b->predecessors.push_back(pick(b->leaf.prefix(order), [](BlockId, std::size_t) { return true; }));
    for (int k = order + 1; k <= R; ++k) {
      const ChainPath chain = b->leaf.prefix(k);
      if (arbitrary) {
        b->predecessors.push_back(pick(chain, [](BlockId, std::size_t) { return true; }));
        continue;
      }
      const ChainPath parent_chain = b->leaf.prefix(k - 1);
      const BlockId link = latest_shared(gen, b->predecessors.back(), *gen.tracked_index(parent_chain), chain);
      b->predecessors.push_back(
          pick(chain, [&](BlockId m, std::size_t idx) { return gen.anchor(m, idx) == link; }));
    }
    gen.admit(b, time);
    out.blocks.push_back(b);
    out.arrival.push_back(time);
  }

  out.delivery.resize(out.blocks.size());
  for (std::size_t i = 0; i < out.delivery.size(); ++i) out.delivery[i] = i;
  for (std::size_t i = 0; i + 1 < out.delivery.size(); ++i) {
    if (unit(rng) < 0.15) std::swap(out.delivery[i], out.delivery[i + 1 + uniform_int(0, std::min<std::size_t>(3, out.delivery.size() - i - 2))]);
  }
  return out;
}

/// Canonical selection straight from the definition: for each chain, every
/// valid member is a candidate; a child candidate qualifies only when the
/// blocks it shares with the parent chain are exactly the parent-canonical
/// blocks shared with the child. The best candidate is the tallest, then the
/// earliest received, then the smallest id.
inline CanonicalView brute_force_view(const BlockForest& f) {
  CanonicalView view;
  view.chains = f.tracked();
  view.lists.resize(view.chains.size());
  auto path_of = [&](BlockId tip, const ChainPath& chain) {
    std::vector<BlockId> path{tip};
    while (path.back() != genesis_id) path.push_back(f.block(path.back()).predecessor(chain.order()));
    std::reverse(path.begin(), path.end());
    return path;
  };
  for (std::size_t c = 0; c < view.chains.size(); ++c) {
    const ChainPath& chain = view.chains[c];
    std::vector<BlockId> shared_with_parent;  // parent-canonical blocks that belong to `chain`
    std::optional<ChainPath> parent_chain;
    if (!chain.is_root()) {
      parent_chain = parent(chain);
      const auto pi = *f.tracked_index(*parent_chain);
      for (BlockId x : view.lists[pi]) {
        if (f.block(x).member_of(chain)) shared_with_parent.push_back(x);
      }
      std::sort(shared_with_parent.begin(), shared_with_parent.end());
    }
    std::vector<BlockId> best;
    BlockId best_tip = genesis_id;
    for (BlockId m : f.members(c)) {
      if (!f.is_valid(m)) continue;
      auto path = path_of(m, chain);
      if (parent_chain) {
        std::vector<BlockId> shared;
        for (BlockId x : path) {
          if (f.block(x).member_of(*parent_chain)) shared.push_back(x);
        }
        std::sort(shared.begin(), shared.end());
        if (shared != shared_with_parent) continue;
      }
      bool better = best.empty();
      if (!better) {
        if (path.size() != best.size()) {
          better = path.size() > best.size();
        } else {
          const double rm = f.record(m).received_time;
          const double rb = f.record(best_tip).received_time;
          better = rm != rb ? rm < rb : m < best_tip;
        }
      }
      if (better) {
        best = std::move(path);
        best_tip = m;
      }
    }
    view.lists[c] = std::move(best);
  }
  return view;
}

}  // namespace blockreduce::testing
