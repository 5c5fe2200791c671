#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "blockreduce/forest.hpp"
#include "blockreduce/hlcr.hpp"

namespace blockreduce {

enum class TxCheck { valid, asset_absent, wrong_owner, asset_in_flight, replayed };

std::string_view to_string(TxCheck check) noexcept;

/// Cross-chain transfer waiting at its destination for the coincident block
/// that completes its settlement condition.
struct PendingEntry {
  Transaction tx;
  int ancestor_order = 1;
  BlockId link1 = genesis_id;  // ancestor-chain block that relayed the transfer
  std::uint64_t link1_height = 0;
  std::uint64_t commit_height = 0;
  std::uint32_t body_index = 0;

  friend bool operator==(const PendingEntry&, const PendingEntry&) = default;
};

/// Blocks that completed a settled credit: `link1` in the ancestor chain and,
/// for two-link transfers, `link2` in the destination chain.
struct CreditRecord {
  int ancestor_order = 1;
  BlockId link1 = genesis_id;
  std::optional<BlockId> link2;

  friend bool operator==(const CreditRecord&, const CreditRecord&) = default;
};

/// Latest outbound transfer of an asset that left a partition.
struct OutboundTransfer {
  TxId tx = 0;
  ChainPath destination;

  friend bool operator==(const OutboundTransfer&, const OutboundTransfer&) = default;
};

/// State partition of one chain. Everything except `pending_inbound` is
/// written only by blocks of this chain, so it is a function of the chain's
/// canonical list.
struct PartitionState {
  ChainPath chain;
  std::map<AssetId, AccountId> owned_assets;
  std::map<TxId, PendingEntry> pending_inbound;
  /// Assets debited here by an outbound transfer. The transfer is in flight
  /// until its destination applies it; the entry stays as a record after.
  std::map<AssetId, OutboundTransfer> in_flight;
  std::set<TxId> applied_txs;
  std::map<TxId, CreditRecord> credits;

  friend bool operator==(const PartitionState&, const PartitionState&) = default;
};

/// Checks `tx` against the partition it originates in.
TxCheck validate_transaction(const Transaction& tx, const PartitionState& origin_state, AccountId sender);

/// Coincident blocks a cross-chain transfer needs before it is credited.
struct SettlementCondition {
  TxId tx_id = 0;
  ChainPath ancestor;
  /// Link 1 joins origin and ancestor; it is met by the commit block itself
  /// when the origin is the ancestor.
  ChainPath link1_from;
  bool link1_trivial = false;
  /// Link 2 joins destination and ancestor; absent when the destination is
  /// the ancestor.
  std::optional<ChainPath> link2_from;
};

SettlementCondition settlement_condition_for(const Transaction& tx);

/// Report produced when two replicas disagree on a partition.
struct Divergence {
  ChainPath chain;
  std::string detail;
};

/// Compares the parts of two partitions that are a function of the
/// partition's canonical chain: asset ownership, outbound transfers, applied
/// transactions and credits.
std::optional<Divergence> check_state_consistency(const PartitionState& a, const PartitionState& b);

/// Initial asset ownership, per chain.
using AssetAllocation = std::map<ChainPath, std::map<AssetId, AccountId>>;

/// The state partitions of one replica, kept in step with its canonical
/// view. Every applied (chain, block) pair records its deltas so reverting is
/// exact.
class Ledger {
 public:
  struct Failure {
    BlockId block = genesis_id;
    ChainPath chain;
    std::string reason;
  };

  Ledger(const BlockForest& forest, const AssetAllocation& allocation);

  /// Applies `block` as the new canonical tip of tracked chain `idx`: first
  /// the inbound transfers it settles (highest origin order first, then
  /// origin chain left to right, then commit position), then its own body.
  /// Atomic: on failure nothing changes.
  std::optional<Failure> apply_block(std::size_t idx, BlockId block);

  /// Exact inverse of the last apply of `block` on chain `idx`.
  void revert_block(std::size_t idx, BlockId block);

  /// Executes reorg plans: every revert, children first, then every apply,
  /// parents first. On failure the ledger is restored to its prior state.
  std::optional<Failure> apply_plans(const std::vector<ReorgPlan>& plans);

  const PartitionState& state(std::size_t idx) const { return states_[idx]; }
  const PartitionState& state(const ChainPath& chain) const;
  const std::vector<PartitionState>& states() const noexcept { return states_; }

  /// Total number of assets in the initial allocation restricted to the
  /// tracked chains.
  const std::set<AssetId>& initial_assets() const noexcept { return initial_assets_; }

 private:
  enum class Field { owned, in_flight, pending, applied, credit };

  struct Delta {
    Field field;
    std::size_t part;
    std::uint64_t key;
    std::optional<std::uint64_t> before;
    std::optional<OutboundTransfer> flight_before;
    std::optional<PendingEntry> pending_before;
    std::optional<CreditRecord> credit_before;
  };

  using Journal = std::vector<Delta>;

  void set_owner(Journal& j, std::size_t part, AssetId asset, std::optional<AccountId> owner);
  void set_in_flight(Journal& j, std::size_t part, AssetId asset, std::optional<OutboundTransfer> out);
  void set_pending(Journal& j, std::size_t part, TxId tx, std::optional<PendingEntry> entry);
  void set_applied(Journal& j, std::size_t part, TxId tx, bool applied);
  void set_credit(Journal& j, std::size_t part, TxId tx, std::optional<CreditRecord> credit);
  void undo(const Journal& j);

  std::optional<std::string> credit(Journal& j, std::size_t part, const Transaction& tx,
                                    const CreditRecord& record);

  const BlockForest* forest_;
  std::vector<PartitionState> states_;
  std::vector<std::unordered_map<BlockId, Journal>> journals_;
  std::set<AssetId> initial_assets_;
};

/// Conservation check. On a replica that tracks every chain each initial
/// asset must sit in exactly one place: owned by one partition, or in flight
/// (debited by a transfer its destination has not applied). A replica
/// tracking a slice only guarantees no asset is owned twice.
std::optional<std::string> check_conservation(const BlockForest& forest, const Ledger& ledger);

/// Settlement safety: every credit in every partition must rest on blocks
/// that are canonical in the current view.
std::optional<std::string> check_settlement_safety(const BlockForest& forest, const Ledger& ledger,
                                                   const ViewTracker& view);

}  // namespace blockreduce
