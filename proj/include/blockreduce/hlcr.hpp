#pragma once

#include <cstddef>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "blockreduce/forest.hpp"

namespace blockreduce {

/// Canonical chain of every tracked chain, indexed like BlockForest::tracked().
/// Entry h of a list is the canonical block at height h (genesis at 0).
struct CanonicalView {
  std::vector<ChainPath> chains;
  std::vector<std::vector<BlockId>> lists;

  std::optional<std::size_t> index_of(const ChainPath& chain) const;
  const std::vector<BlockId>& canonical(const ChainPath& chain) const;
  BlockId tip(const ChainPath& chain) const { return canonical(chain).back(); }
  BlockId tip(std::size_t idx) const { return lists[idx].back(); }

  friend bool operator==(const CanonicalView&, const CanonicalView&) = default;
};

/// Change of one chain's canonical list: undo `revert` (tip first), then
/// append `apply` (fork point first).
struct ReorgPlan {
  ChainPath chain;
  std::size_t chain_index = 0;
  std::vector<BlockId> revert;
  std::vector<BlockId> apply;

  friend bool operator==(const ReorgPlan&, const ReorgPlan&) = default;
};

/// Chain-selection order among competing tips of one chain: greater height,
/// then earlier receipt, then smaller id. Blocks of one chain all carry that
/// chain's weight 1/p, so the greatest height is the heaviest path.
bool better_tip(const BlockForest& forest, std::size_t chain_idx, BlockId a, BlockId b);

/// Walks predecessors of `tip` in tracked chain `chain_idx` back to genesis.
std::vector<BlockId> chain_to(const BlockForest& forest, std::size_t chain_idx, BlockId tip);

/// Heaviest valid path of the root chain.
std::vector<BlockId> select_canonical_root(const BlockForest& forest);

/// Heaviest valid path of `chain` that contains exactly the blocks of
/// `parent_canonical` that it shares with its parent.
std::vector<BlockId> select_canonical_child(const BlockForest& forest, const ChainPath& chain,
                                            const std::vector<BlockId>& parent_canonical);

/// Difference between two canonical lists of chain `idx`.
ReorgPlan diff_lists(const ChainPath& chain, std::size_t idx, const std::vector<BlockId>& before,
                     const std::vector<BlockId>& after);

/// Recomputes every canonical chain from scratch, root first, and returns the
/// new view with one plan per changed chain, parents before children.
std::pair<CanonicalView, std::vector<ReorgPlan>> recompute_view(const BlockForest& forest,
                                                                const CanonicalView& old);

/// View containing only genesis in every tracked chain.
CanonicalView genesis_view(const BlockForest& forest);

/// Incremental HLCR for one replica. Every admitted block is grouped per
/// chain by its anchor (latest block it shares with the parent chain); the
/// compliant tips of a child chain are exactly the group anchored at the
/// parent canonical chain's latest block shared with the child, so each
/// recomputation only compares group leaders.
class ViewTracker {
 public:
  explicit ViewTracker(const BlockForest& forest);

  /// Registers newly admitted blocks.
  void on_admitted(const std::vector<BlockId>& ids);

  /// Rebuilds the tip groups after blocks were invalidated.
  void rebuild();

  /// Brings the view up to date; returns one plan per changed chain, parents
  /// before children.
  std::vector<ReorgPlan> recompute();

  /// Rolls the view back across plans returned by the last recompute().
  void undo(const std::vector<ReorgPlan>& plans);

  const CanonicalView& view() const noexcept { return view_; }
  BlockId tip(std::size_t idx) const { return view_.tip(idx); }
  const std::vector<BlockId>& canonical(std::size_t idx) const { return view_.lists[idx]; }

  /// True when `id` is on the canonical list of tracked chain `idx`.
  bool is_canonical(std::size_t idx, BlockId id) const;

 private:
  void offer(std::size_t idx, BlockId id);

  const BlockForest* forest_;
  CanonicalView view_;
  // Per tracked chain: anchor -> best tip among members with that anchor.
  std::vector<std::unordered_map<BlockId, BlockId>> leaders_;
};

}  // namespace blockreduce
