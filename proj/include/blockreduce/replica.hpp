#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "blockreduce/forest.hpp"
#include "blockreduce/hlcr.hpp"
#include "blockreduce/ledger.hpp"

namespace blockreduce {

/// One node: its block forest, canonical view and state partitions, kept in
/// step on every received block.
class Replica {
 public:
  struct ReceiveResult {
    AdmitOutcome admission;
    /// Net canonical changes caused by this delivery, parents first.
    std::vector<ReorgPlan> plans;
    /// Blocks that failed to apply and were marked invalid.
    std::vector<Ledger::Failure> failures;
  };

  Replica(HierarchyConfig hierarchy, DifficultySchedule schedule, std::vector<ChainPath> tracked,
          BlockPtr genesis, const AssetAllocation& allocation);

  /// Replica tracking every chain (an observer).
  static std::unique_ptr<Replica> observer(const HierarchyConfig& hierarchy, const DifficultySchedule& schedule,
                                           BlockPtr genesis, const AssetAllocation& allocation);

  Replica(const Replica&) = delete;
  Replica& operator=(const Replica&) = delete;

  ReceiveResult receive(BlockPtr block, double time);

  /// Assembles a block on top of this replica's canonical tips of every
  /// chain of `leaf`'s slice from `achieved_order` to R. `bodies[k]` is the
  /// body for order achieved_order + k.
  BlockPtr build_block(BlockId id, const ChainPath& leaf, int achieved_order,
                       std::vector<std::vector<Transaction>> bodies, double found_time,
                       std::uint32_t miner) const;

  const BlockForest& forest() const noexcept { return *forest_; }
  const ViewTracker& tracker() const noexcept { return *tracker_; }
  const CanonicalView& view() const noexcept { return tracker_->view(); }
  const Ledger& ledger() const noexcept { return *ledger_; }

 private:
  std::unique_ptr<BlockForest> forest_;
  std::unique_ptr<ViewTracker> tracker_;
  std::unique_ptr<Ledger> ledger_;
};

}  // namespace blockreduce
