#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "blockreduce/block.hpp"
#include "blockreduce/difficulty.hpp"
#include "blockreduce/hierarchy.hpp"

namespace blockreduce {

enum class BlockStatus { unknown, buffered, valid, invalid };
enum class AdmissionResult { admitted, buffered, rejected, duplicate };

struct AdmitOutcome {
  AdmissionResult result = AdmissionResult::rejected;
  /// Blocks that became valid during this call, in admission order (the
  /// submitted block first, then any orphans it released).
  std::vector<BlockId> admitted;
  std::vector<BlockId> rejected;
};

/// Position of an admitted block inside one tracked chain.
struct ChainSlot {
  bool member = false;
  std::uint64_t height = 0;
  /// Latest block in this block's chain ancestry (itself included) that is
  /// also a member of the parent chain. Always genesis for the root.
  BlockId anchor = genesis_id;
};

struct BlockRecord {
  BlockPtr block;
  BlockStatus status = BlockStatus::unknown;
  double received_time = 0.0;
  std::uint64_t arrival_seq = 0;
  std::vector<ChainSlot> slots;  // indexed by tracked chain index
  std::string reason;            // why the block was rejected or invalidated
};

/// Append-only store of every block a node has received. The forest tracks a
/// set of chains closed under `parent` (one mining slice for a miner, the whole
/// tree for an observer); validity is judged over the tracked chains only,
/// since a node cannot check chains it does not operate.
class BlockForest {
 public:
  BlockForest(HierarchyConfig hierarchy, DifficultySchedule schedule, std::vector<ChainPath> tracked,
              BlockPtr genesis);

  /// Forest that tracks every chain in the hierarchy.
  static BlockForest full(const HierarchyConfig& hierarchy, const DifficultySchedule& schedule,
                          BlockPtr genesis);

  AdmitOutcome admit(BlockPtr block, double received_time);

  /// Marks an admitted block and all of its admitted descendants invalid.
  /// Returns the ids whose status changed.
  std::vector<BlockId> mark_invalid(BlockId id, const std::string& reason);

  const HierarchyConfig& hierarchy() const noexcept { return hierarchy_; }
  const DifficultySchedule& schedule() const noexcept { return schedule_; }

  /// Tracked chains, root first and then order by order left to right.
  const std::vector<ChainPath>& tracked() const noexcept { return tracked_; }
  std::optional<std::size_t> tracked_index(const ChainPath& chain) const;
  /// Index of the parent of tracked chain `chain_idx`; nullopt for the root.
  std::optional<std::size_t> parent_index(std::size_t chain_idx) const { return parents_[chain_idx]; }
  bool tracks_all() const noexcept { return tracked_.size() == hierarchy_.all_chains().size(); }

  BlockId genesis() const noexcept { return genesis_id; }

  bool contains(BlockId id) const { return records_.count(id) != 0; }
  BlockStatus status(BlockId id) const;
  bool is_valid(BlockId id) const { return status(id) == BlockStatus::valid; }
  const BlockRecord& record(BlockId id) const;
  const Block& block(BlockId id) const { return *record(id).block; }

  bool is_member(BlockId id, std::size_t chain_idx) const;
  std::uint64_t height(BlockId id, std::size_t chain_idx) const;
  BlockId anchor(BlockId id, std::size_t chain_idx) const;
  /// Predecessor of `id` within tracked chain `chain_idx`.
  BlockId predecessor(BlockId id, std::size_t chain_idx) const;

  /// Blocks ever admitted into tracked chain `chain_idx` (genesis first), in
  /// admission order. Includes blocks later marked invalid.
  const std::vector<BlockId>& members(std::size_t chain_idx) const { return members_[chain_idx]; }
  const std::vector<BlockId>& children(std::size_t chain_idx, BlockId id) const;

  std::size_t size() const noexcept { return records_.size(); }
  std::size_t buffered_count() const noexcept { return buffered_; }
  std::vector<BlockId> buffered_ids() const;
  const std::vector<BlockId>& arrival_order() const noexcept { return arrival_; }

 private:
  enum class Check { ok, wait, reject };

  Check evaluate(const Block& block, std::string& reason, std::vector<BlockId>& missing) const;
  void admit_checked(BlockRecord& rec);
  void reject(BlockRecord& rec, std::string reason, AdmitOutcome& out);
  void resolve_waiters(BlockId id, AdmitOutcome& out);

  HierarchyConfig hierarchy_;
  DifficultySchedule schedule_;
  std::vector<ChainPath> tracked_;
  std::vector<std::optional<std::size_t>> parents_;
  std::unordered_map<BlockId, BlockRecord> records_;
  std::vector<std::vector<BlockId>> members_;
  std::vector<std::unordered_map<BlockId, std::vector<BlockId>>> children_;
  std::unordered_map<BlockId, std::vector<BlockId>> waiting_on_;
  std::vector<BlockId> arrival_;
  std::uint64_t next_seq_ = 0;
  std::size_t buffered_ = 0;
};

/// Outbound transfers that block `self` carries upward, computed from the
/// origin chains' ancestry in `forest`. Only origins tracked by `forest` are
/// covered. Entries are sorted by (origin, commit height, body index).
std::vector<ExportEntry> compute_exports(const BlockForest& forest, const ChainPath& leaf,
                                         BlockId self, int achieved_order,
                                         std::span<const BlockId> predecessors,
                                         const std::vector<std::vector<Transaction>>& bodies);

}  // namespace blockreduce
