#include "blockreduce/ledger.hpp"

#include <algorithm>
#include <tuple>

#include "blockreduce/error.hpp"

namespace blockreduce {

std::string_view to_string(TxCheck check) noexcept {
  switch (check) {
    case TxCheck::valid: return "valid";
    case TxCheck::asset_absent: return "asset-absent";
    case TxCheck::wrong_owner: return "wrong-owner";
    case TxCheck::asset_in_flight: return "asset-in-flight";
    case TxCheck::replayed: return "replayed";
  }
  return "unknown";
}

TxCheck validate_transaction(const Transaction& tx, const PartitionState& origin_state, AccountId sender) {
  if (origin_state.applied_txs.count(tx.id)) return TxCheck::replayed;
  auto it = origin_state.owned_assets.find(tx.asset);
  if (it == origin_state.owned_assets.end()) {
    return origin_state.in_flight.count(tx.asset) ? TxCheck::asset_in_flight : TxCheck::asset_absent;
  }
  return it->second == sender ? TxCheck::valid : TxCheck::wrong_owner;
}

SettlementCondition settlement_condition_for(const Transaction& tx) {
  if (!tx.is_cross_chain()) {
    throw Error(ErrorKind::same_origin_destination,
                "transaction " + std::to_string(tx.id) + " stays in " + tx.origin.to_string());
  }
  SettlementCondition c;
  c.tx_id = tx.id;
  c.ancestor = common_ancestor(tx.origin, tx.destination);
  c.link1_from = tx.origin;
  c.link1_trivial = tx.origin == c.ancestor;
  if (tx.destination.order() > c.ancestor.order()) c.link2_from = tx.destination;
  return c;
}

std::optional<Divergence> check_state_consistency(const PartitionState& a, const PartitionState& b) {
  if (a.chain != b.chain) {
    return Divergence{a.chain, "partitions of different chains: " + a.chain.to_string() + " vs " +
                                   b.chain.to_string()};
  }
  auto ia = a.owned_assets.begin();
  auto ib = b.owned_assets.begin();
  while (ia != a.owned_assets.end() || ib != b.owned_assets.end()) {
    const bool a_done = ia == a.owned_assets.end();
    const bool b_done = ib == b.owned_assets.end();
    if (!a_done && !b_done && ia->first == ib->first) {
      if (ia->second != ib->second) {
        return Divergence{a.chain, "asset " + std::to_string(ia->first) + " owned by " +
                                       std::to_string(ia->second) + " vs " + std::to_string(ib->second)};
      }
      ++ia;
      ++ib;
      continue;
    }
    if (b_done || (!a_done && ia->first < ib->first)) {
      return Divergence{a.chain, "asset " + std::to_string(ia->first) + " owned by " +
                                     std::to_string(ia->second) + " vs absent"};
    }
    return Divergence{a.chain, "asset " + std::to_string(ib->first) + " absent vs owned by " +
                                   std::to_string(ib->second)};
  }
  if (a.in_flight != b.in_flight) {
    return Divergence{a.chain, "outbound transfer records differ"};
  }
  if (a.applied_txs != b.applied_txs) {
    std::vector<TxId> diff;
    std::set_symmetric_difference(a.applied_txs.begin(), a.applied_txs.end(), b.applied_txs.begin(),
                                  b.applied_txs.end(), std::back_inserter(diff));
    return Divergence{a.chain, "applied transaction sets differ at tx " + std::to_string(diff.front())};
  }
  if (a.credits != b.credits) {
    return Divergence{a.chain, "settlement records differ"};
  }
  return std::nullopt;
}

Ledger::Ledger(const BlockForest& forest, const AssetAllocation& allocation) : forest_(&forest) {
  const auto& tracked = forest.tracked();
  states_.resize(tracked.size());
  journals_.resize(tracked.size());
  for (std::size_t i = 0; i < tracked.size(); ++i) {
    states_[i].chain = tracked[i];
    auto it = allocation.find(tracked[i]);
    if (it == allocation.end()) continue;
    states_[i].owned_assets = it->second;
    for (const auto& [asset, owner] : it->second) {
      if (!initial_assets_.insert(asset).second) {
        throw Error(ErrorKind::config_invalid, "asset " + std::to_string(asset) + " allocated twice");
      }
    }
  }
}

const PartitionState& Ledger::state(const ChainPath& chain) const {
  auto idx = forest_->tracked_index(chain);
  if (!idx) throw Error(ErrorKind::invalid_path, chain.to_string() + " is not tracked by this ledger");
  return states_[*idx];
}

void Ledger::set_owner(Journal& j, std::size_t part, AssetId asset, std::optional<AccountId> owner) {
  auto& m = states_[part].owned_assets;
  auto it = m.find(asset);
  Delta d{Field::owned, part, asset, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
  if (it != m.end()) d.before = it->second;
  j.push_back(d);
  if (owner) {
    m[asset] = *owner;
  } else if (it != m.end()) {
    m.erase(it);
  }
}

void Ledger::set_in_flight(Journal& j, std::size_t part, AssetId asset, std::optional<OutboundTransfer> out) {
  auto& m = states_[part].in_flight;
  auto it = m.find(asset);
  Delta d{Field::in_flight, part, asset, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
  if (it != m.end()) d.flight_before = it->second;
  j.push_back(d);
  if (out) {
    m[asset] = std::move(*out);
  } else if (it != m.end()) {
    m.erase(it);
  }
}

void Ledger::set_pending(Journal& j, std::size_t part, TxId tx, std::optional<PendingEntry> entry) {
  auto& m = states_[part].pending_inbound;
  auto it = m.find(tx);
  Delta d{Field::pending, part, tx, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
  if (it != m.end()) d.pending_before = it->second;
  j.push_back(d);
  if (entry) {
    m[tx] = std::move(*entry);
  } else if (it != m.end()) {
    m.erase(it);
  }
}

void Ledger::set_applied(Journal& j, std::size_t part, TxId tx, bool applied) {
  auto& s = states_[part].applied_txs;
  Delta d{Field::applied, part, tx, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
  if (s.count(tx)) d.before = 1;
  j.push_back(d);
  if (applied) {
    s.insert(tx);
  } else {
    s.erase(tx);
  }
}

void Ledger::set_credit(Journal& j, std::size_t part, TxId tx, std::optional<CreditRecord> credit) {
  auto& m = states_[part].credits;
  auto it = m.find(tx);
  Delta d{Field::credit, part, tx, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
  if (it != m.end()) d.credit_before = it->second;
  j.push_back(d);
  if (credit) {
    m[tx] = *credit;
  } else if (it != m.end()) {
    m.erase(it);
  }
}

void Ledger::undo(const Journal& j) {
  for (auto it = j.rbegin(); it != j.rend(); ++it) {
    PartitionState& s = states_[it->part];
    switch (it->field) {
      case Field::owned:
        if (it->before) {
          s.owned_assets[it->key] = *it->before;
        } else {
          s.owned_assets.erase(it->key);
        }
        break;
      case Field::in_flight:
        if (it->flight_before) {
          s.in_flight[it->key] = *it->flight_before;
        } else {
          s.in_flight.erase(it->key);
        }
        break;
      case Field::pending:
        if (it->pending_before) {
          s.pending_inbound[it->key] = *it->pending_before;
        } else {
          s.pending_inbound.erase(it->key);
        }
        break;
      case Field::applied:
        if (it->before) {
          s.applied_txs.insert(it->key);
        } else {
          s.applied_txs.erase(it->key);
        }
        break;
      case Field::credit:
        if (it->credit_before) {
          s.credits[it->key] = *it->credit_before;
        } else {
          s.credits.erase(it->key);
        }
        break;
    }
  }
}

std::optional<std::string> Ledger::credit(Journal& j, std::size_t part, const Transaction& tx,
                                          const CreditRecord& record) {
  PartitionState& s = states_[part];
  if (s.applied_txs.count(tx.id)) return std::string(to_string(TxCheck::replayed));
  if (s.owned_assets.count(tx.asset)) return "asset " + std::to_string(tx.asset) + " credited twice";
  set_applied(j, part, tx.id, true);
  set_owner(j, part, tx.asset, tx.new_owner);
  set_credit(j, part, tx.id, record);
  if (s.pending_inbound.count(tx.id)) set_pending(j, part, tx.id, std::nullopt);
  return std::nullopt;
}

std::optional<Ledger::Failure> Ledger::apply_block(std::size_t idx, BlockId id) {
  const Block& b = forest_->block(id);
  const ChainPath& chain = forest_->tracked()[idx];
  const int k = chain.order();
  if (journals_[idx].count(id)) {
    throw Error(ErrorKind::invariant_violation,
                "block " + std::to_string(id) + " applied twice to " + chain.to_string());
  }
  Journal j;
  auto fail = [&](std::string reason) {
    undo(j);
    return Failure{id, chain, std::move(reason)};
  };

  if (!b.is_genesis()) {
    // Inbound settlements completed by this block.
    struct Settlement {
      Transaction tx;
      std::uint64_t commit_height;
      std::uint32_t body_index;
      CreditRecord record;
    };
    std::vector<Settlement> due;
    if (b.achieved_order < k) {
      for (const auto& [tx_id, e] : states_[idx].pending_inbound) {
        if (e.ancestor_order < b.achieved_order || e.ancestor_order >= k) continue;
        const auto a_idx = forest_->tracked_index(chain.prefix(e.ancestor_order));
        if (forest_->height(id, *a_idx) <= e.link1_height) continue;
        due.push_back({e.tx, e.commit_height, e.body_index, CreditRecord{e.ancestor_order, e.link1, id}});
      }
    }
    for (const auto& e : b.exports) {
      if (e.tx.destination != chain) continue;
      due.push_back({e.tx, e.commit_height, e.body_index, CreditRecord{k, id, std::nullopt}});
    }
    std::sort(due.begin(), due.end(), [](const Settlement& x, const Settlement& y) {
      const int ox = x.tx.origin.order();
      const int oy = y.tx.origin.order();
      if (ox != oy) return ox > oy;
      return std::tie(x.tx.origin, x.commit_height, x.body_index) <
             std::tie(y.tx.origin, y.commit_height, y.body_index);
    });
    for (const auto& s : due) {
      if (auto err = credit(j, idx, s.tx, s.record)) {
        return fail("settling tx " + std::to_string(s.tx.id) + ": " + *err);
      }
    }

    // The block's own body for this chain.
    const auto& body = b.body(k);
    const auto height = forest_->height(id, idx);
    for (std::size_t i = 0; i < body.size(); ++i) {
      const Transaction& tx = body[i];
      const TxCheck check = validate_transaction(tx, states_[idx], tx.sender);
      if (check != TxCheck::valid) {
        return fail("tx " + std::to_string(tx.id) + ": " + std::string(to_string(check)));
      }
      set_applied(j, idx, tx.id, true);
      if (!tx.is_cross_chain()) {
        set_owner(j, idx, tx.asset, tx.new_owner);
        continue;
      }
      set_owner(j, idx, tx.asset, std::nullopt);
      set_in_flight(j, idx, tx.asset, OutboundTransfer{tx.id, tx.destination});
      const auto dest = forest_->tracked_index(tx.destination);
      if (dest && chain.is_prefix_of(tx.destination)) {
        set_pending(j, *dest, tx.id,
                    PendingEntry{tx, k, id, height, height, static_cast<std::uint32_t>(i)});
      }
    }

    // Transfers this block relays down from its chain to a descendant.
    for (const auto& e : b.exports) {
      if (e.tx.destination == chain || common_ancestor(e.tx.origin, e.tx.destination) != chain) continue;
      const auto dest = forest_->tracked_index(e.tx.destination);
      if (!dest) continue;
      set_pending(j, *dest, e.tx.id, PendingEntry{e.tx, k, id, height, e.commit_height, e.body_index});
    }
  }
  journals_[idx].emplace(id, std::move(j));
  return std::nullopt;
}

void Ledger::revert_block(std::size_t idx, BlockId id) {
  auto it = journals_[idx].find(id);
  if (it == journals_[idx].end()) {
    throw Error(ErrorKind::invariant_violation, "block " + std::to_string(id) + " is not applied to " +
                                                    forest_->tracked()[idx].to_string());
  }
  undo(it->second);
  journals_[idx].erase(it);
}

std::optional<Ledger::Failure> Ledger::apply_plans(const std::vector<ReorgPlan>& plans) {
  struct Step {
    std::size_t idx;
    BlockId id;
    bool applied;
  };
  std::vector<Step> done;
  for (auto p = plans.rbegin(); p != plans.rend(); ++p) {
    for (BlockId id : p->revert) {
      revert_block(p->chain_index, id);
      done.push_back({p->chain_index, id, false});
    }
  }
  for (const auto& p : plans) {
    for (BlockId id : p.apply) {
      if (auto failure = apply_block(p.chain_index, id)) {
        for (auto s = done.rbegin(); s != done.rend(); ++s) {
          if (s->applied) {
            revert_block(s->idx, s->id);
          } else if (apply_block(s->idx, s->id)) {
            throw Error(ErrorKind::invariant_violation, "could not restore block " + std::to_string(s->id));
          }
        }
        return failure;
      }
      done.push_back({p.chain_index, id, true});
    }
  }
  return std::nullopt;
}

std::optional<std::string> check_conservation(const BlockForest& forest, const Ledger& ledger) {
  std::map<AssetId, int> owned;
  std::map<AssetId, int> total;
  for (const auto& s : ledger.states()) {
    for (const auto& [asset, owner] : s.owned_assets) {
      ++owned[asset];
      ++total[asset];
    }
    for (const auto& [asset, out] : s.in_flight) {
      const auto dest = forest.tracked_index(out.destination);
      if (dest && !ledger.state(*dest).applied_txs.count(out.tx)) ++total[asset];
    }
  }
  for (const auto& [asset, n] : owned) {
    if (n > 1) return "asset " + std::to_string(asset) + " owned in " + std::to_string(n) + " partitions";
  }
  if (!forest.tracks_all()) return std::nullopt;
  for (AssetId asset : ledger.initial_assets()) {
    auto it = total.find(asset);
    const int n = it == total.end() ? 0 : it->second;
    if (n != 1) {
      return "asset " + std::to_string(asset) + " present " + std::to_string(n) + " times (owned or in flight)";
    }
  }
  for (const auto& [asset, n] : total) {
    if (!ledger.initial_assets().count(asset)) return "asset " + std::to_string(asset) + " was never allocated";
  }
  return std::nullopt;
}

std::optional<std::string> check_settlement_safety(const BlockForest& forest, const Ledger& ledger,
                                                   const ViewTracker& view) {
  for (std::size_t d = 0; d < ledger.states().size(); ++d) {
    const auto& s = ledger.state(d);
    for (const auto& [tx, c] : s.credits) {
      const auto a = forest.tracked_index(s.chain.prefix(c.ancestor_order));
      if (!view.is_canonical(*a, c.link1)) {
        return "credit of tx " + std::to_string(tx) + " in " + s.chain.to_string() +
               " rests on non-canonical block " + std::to_string(c.link1);
      }
      if (c.link2 && !view.is_canonical(d, *c.link2)) {
        return "credit of tx " + std::to_string(tx) + " in " + s.chain.to_string() +
               " rests on non-canonical block " + std::to_string(*c.link2);
      }
    }
  }
  return std::nullopt;
}

}  // namespace blockreduce
