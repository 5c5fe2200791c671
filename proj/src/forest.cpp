#include "blockreduce/forest.hpp"

#include <algorithm>
#include <climits>
#include <deque>
#include <tuple>

#include "blockreduce/error.hpp"

namespace blockreduce {

BlockPtr make_genesis(const HierarchyConfig& config) {
  auto g = std::make_shared<Block>();
  g->id = genesis_id;
  g->leaf = config.leaves().front();
  g->achieved_order = 1;
  return g;
}

namespace {

bool top_down_less(const ChainPath& a, const ChainPath& b) {
  return std::make_tuple(a.order(), a) < std::make_tuple(b.order(), b);
}

// First block at or before `start` (walking predecessors in tracked chain
// `chain_idx`) that is also a member of `target`.
BlockId latest_member(const BlockForest& forest, BlockId start, std::size_t chain_idx,
                      const ChainPath& target) {
  BlockId cur = start;
  while (!forest.block(cur).member_of(target)) cur = forest.predecessor(cur, chain_idx);
  return cur;
}

}  // namespace

BlockForest::BlockForest(HierarchyConfig hierarchy, DifficultySchedule schedule,
                         std::vector<ChainPath> tracked, BlockPtr genesis)
    : hierarchy_(std::move(hierarchy)), schedule_(std::move(schedule)), tracked_(std::move(tracked)) {
  hierarchy_.validate();
  if (schedule_.num_orders() != hierarchy_.num_orders) {
    throw Error(ErrorKind::invalid_schedule, "difficulty schedule and hierarchy disagree on R");
  }
  if (!genesis || !genesis->is_genesis()) {
    throw Error(ErrorKind::invalid_path, "forest needs the genesis block");
  }
  std::sort(tracked_.begin(), tracked_.end(), top_down_less);
  tracked_.erase(std::unique(tracked_.begin(), tracked_.end()), tracked_.end());
  if (tracked_.empty()) throw Error(ErrorKind::invalid_path, "forest must track at least one chain");
  parents_.resize(tracked_.size());
  for (std::size_t i = 0; i < tracked_.size(); ++i) {
    if (!hierarchy_.contains(tracked_[i])) {
      throw Error(ErrorKind::invalid_path, tracked_[i].to_string() + " is not part of the hierarchy");
    }
    if (!tracked_[i].is_root()) {
      parents_[i] = tracked_index(parent(tracked_[i]));
      if (!parents_[i]) {
        throw Error(ErrorKind::invalid_path,
                    "tracked chains must include the parent of " + tracked_[i].to_string());
      }
    }
  }
  members_.resize(tracked_.size());
  children_.resize(tracked_.size());

  BlockRecord rec;
  rec.block = std::move(genesis);
  rec.status = BlockStatus::valid;
  rec.arrival_seq = next_seq_++;
  rec.slots.assign(tracked_.size(), ChainSlot{true, 0, genesis_id});
  records_.emplace(genesis_id, std::move(rec));
  for (auto& m : members_) m.push_back(genesis_id);
  arrival_.push_back(genesis_id);
}

BlockForest BlockForest::full(const HierarchyConfig& hierarchy, const DifficultySchedule& schedule,
                              BlockPtr genesis) {
  return BlockForest(hierarchy, schedule, hierarchy.all_chains(), std::move(genesis));
}

std::optional<std::size_t> BlockForest::tracked_index(const ChainPath& chain) const {
  auto it = std::lower_bound(tracked_.begin(), tracked_.end(), chain, top_down_less);
  if (it == tracked_.end() || *it != chain) return std::nullopt;
  return static_cast<std::size_t>(it - tracked_.begin());
}

BlockStatus BlockForest::status(BlockId id) const {
  auto it = records_.find(id);
  return it == records_.end() ? BlockStatus::unknown : it->second.status;
}

const BlockRecord& BlockForest::record(BlockId id) const {
  auto it = records_.find(id);
  if (it == records_.end()) {
    throw Error(ErrorKind::invariant_violation, "unknown block id " + std::to_string(id));
  }
  return it->second;
}

bool BlockForest::is_member(BlockId id, std::size_t chain_idx) const {
  auto it = records_.find(id);
  return it != records_.end() && !it->second.slots.empty() && it->second.slots[chain_idx].member;
}

std::uint64_t BlockForest::height(BlockId id, std::size_t chain_idx) const {
  return record(id).slots.at(chain_idx).height;
}

BlockId BlockForest::anchor(BlockId id, std::size_t chain_idx) const {
  return record(id).slots.at(chain_idx).anchor;
}

BlockId BlockForest::predecessor(BlockId id, std::size_t chain_idx) const {
  const Block& b = block(id);
  if (b.is_genesis()) return genesis_id;
  return b.predecessor(tracked_[chain_idx].order());
}

const std::vector<BlockId>& BlockForest::children(std::size_t chain_idx, BlockId id) const {
  static const std::vector<BlockId> none;
  auto it = children_[chain_idx].find(id);
  return it == children_[chain_idx].end() ? none : it->second;
}

std::vector<BlockId> BlockForest::buffered_ids() const {
  std::vector<BlockId> out;
  for (BlockId id : arrival_) {
    if (records_.at(id).status == BlockStatus::buffered) out.push_back(id);
  }
  return out;
}

BlockForest::Check BlockForest::evaluate(const Block& b, std::string& reason,
                                         std::vector<BlockId>& missing) const {
  const int R = hierarchy_.num_orders;
  if (b.is_genesis()) {
    reason = "block reuses the genesis id";
    return Check::reject;
  }
  if (!hierarchy_.contains(b.leaf) || b.leaf.order() != R) {
    reason = "slice does not end at a leaf of the hierarchy";
    return Check::reject;
  }
  if (b.achieved_order < 1 || b.achieved_order > R) {
    reason = "achieved order out of range";
    return Check::reject;
  }
  const auto span = static_cast<std::size_t>(R - b.achieved_order + 1);
  if (b.predecessors.size() != span || b.bodies.size() != span) {
    reason = "expected one predecessor and one body per order from the achieved order to R";
    return Check::reject;
  }
  for (int k = b.achieved_order; k <= R; ++k) {
    const ChainPath chain = b.leaf.prefix(k);
    for (const auto& tx : b.body(k)) {
      if (tx.origin != chain || !hierarchy_.contains(tx.destination)) {
        reason = "transaction " + std::to_string(tx.id) + " does not originate in " + chain.to_string();
        return Check::reject;
      }
    }
  }
  for (const auto& e : b.exports) {
    const int from = e.tx.origin.order();
    const int via = common_ancestor(e.tx.origin, e.tx.destination).order();
    if (!e.tx.origin.is_prefix_of(b.leaf) || from <= b.achieved_order || via < b.achieved_order ||
        via >= from) {
      reason = "export of transaction " + std::to_string(e.tx.id) + " is not carried by this block";
      return Check::reject;
    }
  }

  bool waiting = false;
  for (int k = b.achieved_order; k <= R; ++k) {
    const ChainPath chain = b.leaf.prefix(k);
    if (!tracked_index(chain)) continue;
    const BlockId pred = b.predecessor(k);
    switch (status(pred)) {
      case BlockStatus::invalid:
        reason = "predecessor in " + chain.to_string() + " is invalid";
        return Check::reject;
      case BlockStatus::unknown:
      case BlockStatus::buffered:
        missing.push_back(pred);
        waiting = true;
        break;
      case BlockStatus::valid:
        if (!block(pred).member_of(chain)) {
          reason = "predecessor in " + chain.to_string() + " is not a block of that chain";
          return Check::reject;
        }
        if (block(pred).found_time > b.found_time) {
          reason = "predecessor found after the block itself";
          return Check::reject;
        }
        break;
    }
  }
  if (waiting) return Check::wait;

  // Coincident linkage: for every pair (parent, child) of tracked chains the
  // block belongs to, the previous block shared by the pair must be the same
  // whether found by walking the child chain or the parent chain.
  for (int k = b.achieved_order + 1; k <= R; ++k) {
    const ChainPath child_chain = b.leaf.prefix(k);
    const auto ci = tracked_index(child_chain);
    const auto pi = tracked_index(b.leaf.prefix(k - 1));
    if (!ci || !pi) continue;
    const BlockId via_child = anchor(b.predecessor(k), *ci);
    const BlockId via_parent = latest_member(*this, b.predecessor(k - 1), *pi, child_chain);
    if (via_child != via_parent) {
      reason = "coincident linkage broken between " + b.leaf.prefix(k - 1).to_string() + " and " +
               child_chain.to_string();
      return Check::reject;
    }
  }

  auto expected = compute_exports(*this, b.leaf, b.id, b.achieved_order, b.predecessors, b.bodies);
  std::vector<ExportEntry> carried;
  for (const auto& e : b.exports) {
    if (tracked_index(e.tx.origin)) carried.push_back(e);
  }
  if (carried != expected) {
    reason = "exported transfers do not match the origin chains";
    return Check::reject;
  }
  return Check::ok;
}

void BlockForest::admit_checked(BlockRecord& rec) {
  const Block& b = *rec.block;
  rec.slots.assign(tracked_.size(), ChainSlot{});
  for (std::size_t i = 0; i < tracked_.size(); ++i) {
    const ChainPath& chain = tracked_[i];
    if (!b.member_of(chain)) continue;
    const BlockId pred = b.predecessor(chain.order());
    ChainSlot& slot = rec.slots[i];
    slot.member = true;
    slot.height = height(pred, i) + 1;
    if (!parents_[i]) {
      slot.anchor = genesis_id;
    } else if (b.achieved_order <= chain.order() - 1) {
      slot.anchor = b.id;
    } else {
      slot.anchor = anchor(pred, i);
    }
    members_[i].push_back(b.id);
    children_[i][pred].push_back(b.id);
  }
  if (rec.status == BlockStatus::buffered) --buffered_;
  rec.status = BlockStatus::valid;
}

void BlockForest::reject(BlockRecord& rec, std::string reason, AdmitOutcome& out) {
  if (rec.status == BlockStatus::buffered) --buffered_;
  rec.status = BlockStatus::invalid;
  rec.reason = std::move(reason);
  out.rejected.push_back(rec.block->id);
}

void BlockForest::resolve_waiters(BlockId id, AdmitOutcome& out) {
  std::deque<BlockId> work{id};
  while (!work.empty()) {
    const BlockId done = work.front();
    work.pop_front();
    auto it = waiting_on_.find(done);
    if (it == waiting_on_.end()) continue;
    auto waiters = std::move(it->second);
    waiting_on_.erase(it);
    for (BlockId w : waiters) {
      BlockRecord& rec = records_.at(w);
      if (rec.status != BlockStatus::buffered) continue;
      std::string reason;
      std::vector<BlockId> missing;
      switch (evaluate(*rec.block, reason, missing)) {
        case Check::ok:
          admit_checked(rec);
          out.admitted.push_back(w);
          work.push_back(w);
          break;
        case Check::reject:
          reject(rec, std::move(reason), out);
          work.push_back(w);
          break;
        case Check::wait:
          for (BlockId m : missing) waiting_on_[m].push_back(w);
          break;
      }
    }
  }
}

AdmitOutcome BlockForest::admit(BlockPtr block, double received_time) {
  AdmitOutcome out;
  if (!block) throw Error(ErrorKind::invariant_violation, "null block");
  if (records_.count(block->id)) {
    out.result = AdmissionResult::duplicate;
    return out;
  }
  const BlockId id = block->id;
  BlockRecord& rec = records_[id];
  rec.block = std::move(block);
  rec.received_time = received_time;
  rec.arrival_seq = next_seq_++;
  arrival_.push_back(id);

  std::string reason;
  std::vector<BlockId> missing;
  switch (evaluate(*rec.block, reason, missing)) {
    case Check::ok:
      admit_checked(rec);
      out.result = AdmissionResult::admitted;
      out.admitted.push_back(id);
      break;
    case Check::reject:
      reject(rec, std::move(reason), out);
      out.result = AdmissionResult::rejected;
      break;
    case Check::wait:
      rec.status = BlockStatus::buffered;
      ++buffered_;
      for (BlockId m : missing) waiting_on_[m].push_back(id);
      out.result = AdmissionResult::buffered;
      return out;
  }
  resolve_waiters(id, out);
  return out;
}

std::vector<BlockId> BlockForest::mark_invalid(BlockId id, const std::string& reason) {
  std::vector<BlockId> changed;
  auto it = records_.find(id);
  if (it == records_.end() || it->second.status != BlockStatus::valid || id == genesis_id) return changed;
  std::deque<BlockId> work{id};
  it->second.status = BlockStatus::invalid;
  it->second.reason = reason;
  changed.push_back(id);
  while (!work.empty()) {
    const BlockId cur = work.front();
    work.pop_front();
    for (std::size_t i = 0; i < tracked_.size(); ++i) {
      if (!is_member(cur, i)) continue;
      for (BlockId child : children(i, cur)) {
        BlockRecord& rec = records_.at(child);
        if (rec.status != BlockStatus::valid) continue;
        rec.status = BlockStatus::invalid;
        rec.reason = "descends from invalid block " + std::to_string(id);
        changed.push_back(child);
        work.push_back(child);
      }
    }
  }
  return changed;
}

std::vector<ExportEntry> compute_exports(const BlockForest& forest, const ChainPath& leaf,
                                         BlockId self, int achieved_order,
                                         std::span<const BlockId> predecessors,
                                         const std::vector<std::vector<Transaction>>& bodies) {
  std::vector<ExportEntry> out;
  const int R = leaf.order();
  for (int k = achieved_order + 1; k <= R; ++k) {
    const ChainPath chain = leaf.prefix(k);
    const auto idx = forest.tracked_index(chain);
    if (!idx) continue;

    // A transfer whose relay chain has order `via` leaves at the first block
    // at or after its commit whose achieved order is <= via. `cut` is the
    // smallest achieved order among blocks from the commit up to (excluding)
    // the new block.
    auto consider = [&](const std::vector<Transaction>& body, BlockId commit, std::uint64_t h, int cut) {
      for (std::size_t i = 0; i < body.size(); ++i) {
        const Transaction& tx = body[i];
        if (!tx.is_cross_chain()) continue;
        const int via = common_ancestor(tx.origin, tx.destination).order();
        if (via >= k || via < achieved_order || via >= cut) continue;
        out.push_back(ExportEntry{tx, commit, h, static_cast<std::uint32_t>(i)});
      }
    };

    const BlockId pred = predecessors[static_cast<std::size_t>(k - achieved_order)];
    const auto& own = bodies[static_cast<std::size_t>(k - achieved_order)];
    consider(own, self, forest.height(pred, *idx) + 1, INT_MAX);

    int cut = INT_MAX;
    BlockId cur = pred;
    while (cur != genesis_id) {
      const Block& b = forest.block(cur);
      const int here = std::min(cut, b.achieved_order);
      if (here <= achieved_order) break;
      consider(b.body(k), cur, forest.height(cur, *idx), here);
      cut = here;
      cur = b.predecessor(k);
    }
  }
  std::sort(out.begin(), out.end(), [](const ExportEntry& a, const ExportEntry& b) {
    return std::tie(a.tx.origin, a.commit_height, a.body_index) <
           std::tie(b.tx.origin, b.commit_height, b.body_index);
  });
  return out;
}

}  // namespace blockreduce
