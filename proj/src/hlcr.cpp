#include "blockreduce/hlcr.hpp"

#include <algorithm>
#include <string>

#include "blockreduce/error.hpp"

namespace blockreduce {

std::optional<std::size_t> CanonicalView::index_of(const ChainPath& chain) const {
  auto it = std::find(chains.begin(), chains.end(), chain);
  if (it == chains.end()) return std::nullopt;
  return static_cast<std::size_t>(it - chains.begin());
}

const std::vector<BlockId>& CanonicalView::canonical(const ChainPath& chain) const {
  auto idx = index_of(chain);
  if (!idx) throw Error(ErrorKind::invalid_path, chain.to_string() + " is not tracked by this view");
  return lists[*idx];
}

bool better_tip(const BlockForest& forest, std::size_t chain_idx, BlockId a, BlockId b) {
  const auto ha = forest.height(a, chain_idx);
  const auto hb = forest.height(b, chain_idx);
  if (ha != hb) return ha > hb;
  const double ra = forest.record(a).received_time;
  const double rb = forest.record(b).received_time;
  if (ra != rb) return ra < rb;
  return a < b;
}

std::vector<BlockId> chain_to(const BlockForest& forest, std::size_t chain_idx, BlockId tip) {
  std::vector<BlockId> out(forest.height(tip, chain_idx) + 1);
  BlockId cur = tip;
  for (std::size_t h = out.size(); h-- > 0;) {
    out[h] = cur;
    cur = forest.predecessor(cur, chain_idx);
  }
  return out;
}

namespace {

BlockId best_member(const BlockForest& forest, std::size_t idx, std::optional<BlockId> anchor) {
  BlockId best = genesis_id;
  for (BlockId id : forest.members(idx)) {
    if (!forest.is_valid(id)) continue;
    if (anchor && forest.anchor(id, idx) != *anchor) continue;
    if (better_tip(forest, idx, id, best)) best = id;
  }
  return best;
}

// Latest block of the parent canonical list that also belongs to `chain`.
BlockId latest_shared(const BlockForest& forest, const ChainPath& chain,
                      const std::vector<BlockId>& parent_canonical) {
  for (auto it = parent_canonical.rbegin(); it != parent_canonical.rend(); ++it) {
    if (forest.block(*it).member_of(chain)) return *it;
  }
  return genesis_id;
}

}  // namespace

std::vector<BlockId> select_canonical_root(const BlockForest& forest) {
  return chain_to(forest, 0, best_member(forest, 0, std::nullopt));
}

std::vector<BlockId> select_canonical_child(const BlockForest& forest, const ChainPath& chain,
                                            const std::vector<BlockId>& parent_canonical) {
  const auto idx = forest.tracked_index(chain);
  if (!idx) throw Error(ErrorKind::invalid_path, chain.to_string() + " is not tracked");
  if (!forest.parent_index(*idx)) return select_canonical_root(forest);
  const BlockId shared = latest_shared(forest, chain, parent_canonical);
  return chain_to(forest, *idx, best_member(forest, *idx, shared));
}

ReorgPlan diff_lists(const ChainPath& chain, std::size_t idx, const std::vector<BlockId>& before,
                     const std::vector<BlockId>& after) {
  ReorgPlan plan;
  plan.chain = chain;
  plan.chain_index = idx;
  std::size_t common = 0;
  while (common < before.size() && common < after.size() && before[common] == after[common]) ++common;
  for (std::size_t i = before.size(); i-- > common;) plan.revert.push_back(before[i]);
  plan.apply.assign(after.begin() + static_cast<std::ptrdiff_t>(common), after.end());
  return plan;
}

CanonicalView genesis_view(const BlockForest& forest) {
  CanonicalView v;
  v.chains = forest.tracked();
  v.lists.assign(v.chains.size(), std::vector<BlockId>{genesis_id});
  return v;
}

std::pair<CanonicalView, std::vector<ReorgPlan>> recompute_view(const BlockForest& forest,
                                                                const CanonicalView& old) {
  CanonicalView next = genesis_view(forest);
  std::vector<ReorgPlan> plans;
  for (std::size_t i = 0; i < next.chains.size(); ++i) {
    const auto parent = forest.parent_index(i);
    next.lists[i] = parent ? select_canonical_child(forest, next.chains[i], next.lists[*parent])
                           : select_canonical_root(forest);
    const auto old_idx = old.index_of(next.chains[i]);
    static const std::vector<BlockId> only_genesis{genesis_id};
    const auto& before = old_idx ? old.lists[*old_idx] : only_genesis;
    if (before != next.lists[i]) plans.push_back(diff_lists(next.chains[i], i, before, next.lists[i]));
  }
  return {std::move(next), std::move(plans)};
}

ViewTracker::ViewTracker(const BlockForest& forest) : forest_(&forest), view_(genesis_view(forest)) {
  rebuild();
  recompute();
}

void ViewTracker::offer(std::size_t idx, BlockId id) {
  const BlockId key = forest_->anchor(id, idx);
  auto [it, inserted] = leaders_[idx].try_emplace(key, id);
  if (!inserted && better_tip(*forest_, idx, id, it->second)) it->second = id;
}

void ViewTracker::on_admitted(const std::vector<BlockId>& ids) {
  for (BlockId id : ids) {
    for (std::size_t i = 0; i < leaders_.size(); ++i) {
      if (forest_->is_member(id, i)) offer(i, id);
    }
  }
}

void ViewTracker::rebuild() {
  leaders_.assign(forest_->tracked().size(), {});
  for (std::size_t i = 0; i < leaders_.size(); ++i) {
    for (BlockId id : forest_->members(i)) {
      if (forest_->is_valid(id)) offer(i, id);
    }
  }
}

std::vector<ReorgPlan> ViewTracker::recompute() {
  std::vector<ReorgPlan> plans;
  for (std::size_t i = 0; i < view_.chains.size(); ++i) {
    const auto parent = forest_->parent_index(i);
    const BlockId key = parent ? latest_shared(*forest_, view_.chains[i], view_.lists[*parent]) : genesis_id;
    auto it = leaders_[i].find(key);
    if (it == leaders_[i].end()) {
      throw Error(ErrorKind::invariant_violation,
                  "no compliant tip for " + view_.chains[i].to_string());
    }
    const BlockId tip = it->second;
    auto& list = view_.lists[i];
    if (list.back() == tip) continue;

    // Walk back from the new tip until the walk meets the current list.
    std::vector<BlockId> fresh;
    BlockId cur = tip;
    for (;;) {
      const auto h = forest_->height(cur, i);
      if (h < list.size() && list[h] == cur) break;
      fresh.push_back(cur);
      cur = forest_->predecessor(cur, i);
    }
    ReorgPlan plan;
    plan.chain = view_.chains[i];
    plan.chain_index = i;
    const auto fork_height = forest_->height(cur, i);
    for (std::size_t h = list.size() - 1; h > fork_height; --h) plan.revert.push_back(list[h]);
    plan.apply.assign(fresh.rbegin(), fresh.rend());
    list.resize(fork_height + 1);
    list.insert(list.end(), plan.apply.begin(), plan.apply.end());
    plans.push_back(std::move(plan));
  }
  return plans;
}

void ViewTracker::undo(const std::vector<ReorgPlan>& plans) {
  for (auto it = plans.rbegin(); it != plans.rend(); ++it) {
    auto& list = view_.lists[it->chain_index];
    list.resize(list.size() - it->apply.size());
    list.insert(list.end(), it->revert.rbegin(), it->revert.rend());
  }
}

bool ViewTracker::is_canonical(std::size_t idx, BlockId id) const {
  if (!forest_->is_member(id, idx)) return false;
  const auto h = forest_->height(id, idx);
  const auto& list = view_.lists[idx];
  return h < list.size() && list[h] == id;
}

}  // namespace blockreduce
