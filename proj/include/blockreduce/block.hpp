#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "blockreduce/hierarchy.hpp"

namespace blockreduce {

using BlockId = std::uint64_t;
using TxId = std::uint64_t;
using AssetId = std::uint64_t;
using AccountId = std::uint64_t;

inline constexpr BlockId genesis_id = 0;

/// Asset transfer. `origin` is the partition debited, `destination` the one
/// credited; equal paths make it an ordinary single-chain transfer.
struct Transaction {
  TxId id = 0;
  ChainPath origin;
  ChainPath destination;
  AssetId asset = 0;
  AccountId sender = 0;
  AccountId new_owner = 0;
  double injected_time = 0.0;

  bool is_cross_chain() const { return origin != destination; }
  friend bool operator==(const Transaction&, const Transaction&) = default;
};

/// An outbound transfer carried upward by the first block after its commit
/// that is shared between the origin chain and the common ancestor of origin
/// and destination. Nodes that do not operate the origin chain learn about the
/// transfer from these entries.
struct ExportEntry {
  Transaction tx;
  BlockId commit_block = 0;
  std::uint64_t commit_height = 0;  // height of commit_block in the origin chain
  std::uint32_t body_index = 0;

  friend bool operator==(const ExportEntry&, const ExportEntry&) = default;
};

/// A merged-mined block. It belongs to every chain on the slice of `leaf` with
/// order >= achieved_order; per-order data is stored at index
/// (order - achieved_order).
struct Block {
  BlockId id = 0;
  ChainPath leaf;
  int achieved_order = 1;
  std::vector<BlockId> predecessors;
  std::vector<std::vector<Transaction>> bodies;
  std::vector<ExportEntry> exports;
  double found_time = 0.0;
  std::uint32_t miner = 0;

  bool is_genesis() const noexcept { return id == genesis_id; }

  /// Shared by more than one order.
  bool is_coincident() const noexcept { return achieved_order < leaf.order(); }

  bool member_of(const ChainPath& chain) const noexcept {
    return is_genesis() || (chain.order() >= achieved_order && chain.is_prefix_of(leaf));
  }

  BlockId predecessor(int order) const {
    return predecessors.at(static_cast<std::size_t>(order - achieved_order));
  }

  const std::vector<Transaction>& body(int order) const {
    return bodies.at(static_cast<std::size_t>(order - achieved_order));
  }
};

using BlockPtr = std::shared_ptr<const Block>;

/// The block every chain starts from; it is a member of all chains.
BlockPtr make_genesis(const HierarchyConfig& config);

}  // namespace blockreduce
