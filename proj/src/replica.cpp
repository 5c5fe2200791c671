#include "blockreduce/replica.hpp"

#include <string>

#include "blockreduce/error.hpp"

namespace blockreduce {

Replica::Replica(HierarchyConfig hierarchy, DifficultySchedule schedule, std::vector<ChainPath> tracked,
                 BlockPtr genesis, const AssetAllocation& allocation)
    : forest_(std::make_unique<BlockForest>(std::move(hierarchy), std::move(schedule), std::move(tracked),
                                            std::move(genesis))),
      tracker_(std::make_unique<ViewTracker>(*forest_)),
      ledger_(std::make_unique<Ledger>(*forest_, allocation)) {}

std::unique_ptr<Replica> Replica::observer(const HierarchyConfig& hierarchy, const DifficultySchedule& schedule,
                                           BlockPtr genesis, const AssetAllocation& allocation) {
  return std::make_unique<Replica>(hierarchy, schedule, hierarchy.all_chains(), std::move(genesis), allocation);
}

Replica::ReceiveResult Replica::receive(BlockPtr block, double time) {
  ReceiveResult out;
  out.admission = forest_->admit(std::move(block), time);
  if (out.admission.admitted.empty()) return out;
  tracker_->on_admitted(out.admission.admitted);
  for (;;) {
    auto plans = tracker_->recompute();
    auto failure = ledger_->apply_plans(plans);
    if (!failure) {
      out.plans = std::move(plans);
      return out;
    }
    // The ledger rolled itself back; do the same for the view, drop the
    // offending block (and its descendants) and select again.
    tracker_->undo(plans);
    forest_->mark_invalid(failure->block, failure->reason);
    tracker_->rebuild();
    out.failures.push_back(std::move(*failure));
  }
}

BlockPtr Replica::build_block(BlockId id, const ChainPath& leaf, int achieved_order,
                              std::vector<std::vector<Transaction>> bodies, double found_time,
                              std::uint32_t miner) const {
  const int R = forest_->hierarchy().num_orders;
  if (achieved_order < 1 || achieved_order > R) {
    throw Error(ErrorKind::order_out_of_range, "achieved order " + std::to_string(achieved_order));
  }
  auto b = std::make_shared<Block>();
  b->id = id;
  b->leaf = leaf;
  b->achieved_order = achieved_order;
  b->found_time = found_time;
  b->miner = miner;
  bodies.resize(static_cast<std::size_t>(R - achieved_order + 1));
  b->bodies = std::move(bodies);
  for (int k = achieved_order; k <= R; ++k) {
    const auto idx = forest_->tracked_index(leaf.prefix(k));
    if (!idx) {
      throw Error(ErrorKind::invalid_path, "replica does not track " + leaf.prefix(k).to_string());
    }
    b->predecessors.push_back(tracker_->tip(*idx));
  }
  b->exports = compute_exports(*forest_, leaf, id, achieved_order, b->predecessors, b->bodies);
  return b;
}

}  // namespace blockreduce
