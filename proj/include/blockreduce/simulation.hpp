#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "blockreduce/block.hpp"
#include "blockreduce/difficulty.hpp"
#include "blockreduce/hierarchy.hpp"
#include "blockreduce/hlcr.hpp"
#include "blockreduce/netsim.hpp"

namespace blockreduce {

struct NetworkSpec {
  std::size_t nodes = 24;
  int degree = 8;
  DelayModel delay = DelayModel::constant_delay(1.0);
  PartitionPolicy policy = PartitionPolicy::uniform;
};

/// Transaction injection. Each transaction debits a random asset currently
/// owned in a uniformly chosen origin chain.
struct WorkloadSpec {
  double tx_rate = 0.0;               // transactions per time unit, network-wide
  double same_chain_fraction = 0.2;   // remaining ones pick another chain uniformly
  std::size_t assets_per_chain = 0;
  std::uint32_t accounts = 16;
  double visibility_delay = 1.0;      // time before miners can include a transaction
  std::size_t max_txs_per_body = 8;
};

enum class AdversaryStrategy {
  /// Mine a private branch, publish it when the public chain catches up,
  /// adopt the public chain when it is strictly longer.
  withhold,
  /// Fork the target leaf chain from just before its latest block shared with
  /// the parent chain and publish every block immediately.
  omit_coincident,
};

std::string to_string(AdversaryStrategy s);
AdversaryStrategy parse_adversary_strategy(const std::string& text);

struct AdversarySpec {
  double beta = 0.0;  // hash-power fraction
  ChainPath target;   // root, or a leaf
  AdversaryStrategy strategy = AdversaryStrategy::withhold;
};

struct SimConfig {
  HierarchyConfig hierarchy;
  DifficultySchedule schedule;
  NetworkSpec network;
  /// Network-wide block rate per order: λ_r counts blocks meeting order r on
  /// any order-r chain, so λ_r / λ_R = p_r / p_R.
  std::vector<double> rates;
  AdversarySpec adversary;
  WorkloadSpec workload;
  double duration = 1000.0;
  std::uint64_t seed = 1;
  /// State-consistency and conservation checks.
  bool check_consistency = true;
  double check_interval = 25.0;
  bool record_deliveries = false;

  /// Throws Error(config_invalid).
  void validate() const;

  /// Rates derived from a schedule and the network-wide leaf-order rate.
  static std::vector<double> rates_from_schedule(const DifficultySchedule& schedule, double leaf_rate);
};

struct BlockTrace {
  BlockId id = 0;
  ChainPath leaf;
  int achieved_order = 1;
  std::uint32_t miner = 0;
  bool adversarial = false;
  double found_time = 0.0;
  double published_time = 0.0;
  /// For every chain the block belongs to (orders achieved..R), the largest
  /// delivery delay to that chain's sub-network members.
  std::vector<double> spread;
};

struct DeliveryTrace {
  double time = 0.0;
  std::uint32_t node = 0;
  BlockId block = 0;
};

struct TxTrace {
  Transaction tx;
};

struct SnapshotTrace {
  double time = 0.0;
  std::vector<std::pair<BlockId, std::uint64_t>> tips;  // per chain (all_chains order): tip, height
};

struct IssueTrace {
  double time = 0.0;
  std::string kind;  // divergence | conservation | settlement | adversary-canonical | orphan
  std::string detail;
};

struct TraceRecord {
  std::vector<ChainPath> chains;  // all chains, root first
  std::vector<BlockTrace> blocks;
  std::vector<DeliveryTrace> deliveries;
  std::vector<TxTrace> txs;
  std::vector<SnapshotTrace> snapshots;
  std::vector<IssueTrace> issues;
  CanonicalView final_view;  // observer's view after the drain
  /// Credited transfers in the observer's final state: tx -> (link1, link2).
  std::map<TxId, std::pair<BlockId, std::optional<BlockId>>> settlements;
  /// Block committing each transaction on the observer's final canonical chains.
  std::map<TxId, BlockId> commits;
  double end_time = 0.0;
  double drain_time = 0.0;
  bool drained = true;
  std::size_t consistency_checks = 0;
  std::size_t state_comparisons = 0;
  std::size_t replicas = 0;
  std::uint64_t seed = 0;

  std::size_t issue_count(const std::string& kind) const;
};

/// The sub-networks and overlays run() builds for `config`; lets callers
/// measure the delays of a configuration before running it.
SubnetworkAssignment simulation_network(const SimConfig& config);

/// Runs one seeded simulation. Deterministic in the config.
TraceRecord run(const SimConfig& config);

/// Same loop with the adversary enabled; beta = 0 is an ordinary run.
TraceRecord run_adversary(const SimConfig& config);

/// Line-delimited JSON, one record per event, in time order. Passing a
/// window [from, to] writes only the events inside it; the closing "end"
/// record is written when the window reaches the drain time.
void write_trace_jsonl(const TraceRecord& trace, std::ostream& out,
                       double from = -std::numeric_limits<double>::infinity(),
                       double to = std::numeric_limits<double>::infinity());

}  // namespace blockreduce
