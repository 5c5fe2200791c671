#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "blockreduce/difficulty.hpp"
#include "blockreduce/forest.hpp"
#include "blockreduce/hierarchy.hpp"
#include "blockreduce/ledger.hpp"

namespace blockreduce {

/// Transfer carried in one body of a scripted block. Its origin is the chain
/// of the slice at `order`.
struct ScenarioTx {
  TxId id = 0;
  int order = 1;
  ChainPath destination;
  AssetId asset = 0;
  AccountId sender = 0;
  AccountId new_owner = 0;
};

struct ScenarioBlock {
  std::string name;
  ChainPath leaf;
  int achieved_order = 1;
  std::map<int, std::string> predecessors;  // order -> block name ("G" is genesis)
  double time = 0.0;
  std::vector<ScenarioTx> txs;
};

/// `before` is an ancestor of `after` in `chain`. Checked on the replica's
/// canonical list when it operates `chain`, otherwise by following the
/// predecessor references of `after` it has stored.
struct PrecedesCheck {
  ChainPath chain;
  std::string before;
  std::string after;
};

/// Assertions about one replica at a checkpoint.
struct Expectation {
  std::string replica;
  std::map<ChainPath, std::string> tips;
  std::map<ChainPath, std::vector<std::string>> canonical;
  std::map<ChainPath, std::vector<std::string>> contains;
  std::map<ChainPath, std::vector<std::string>> excludes;
  std::vector<PrecedesCheck> precedes;
  /// Chain -> asset -> owner; nullopt asserts the asset is not owned there.
  std::map<ChainPath, std::map<AssetId, std::optional<AccountId>>> owners;
  std::map<std::string, BlockStatus> status;
};

struct Checkpoint {
  std::string label;
  std::vector<Expectation> expectations;
};

using ScenarioStep = std::variant<ScenarioBlock, Checkpoint>;

/// A node taking part in a scenario: it operates the slice of `leaf`, or
/// every chain when `leaf` is empty.
struct ScenarioReplica {
  std::string name;
  std::optional<ChainPath> leaf;
};

/// Scripted, fully deterministic sequence of blocks with expected canonical
/// views and states at checkpoints. Every block is delivered to every replica
/// at its time.
struct Scenario {
  std::string name;
  std::string description;
  HierarchyConfig hierarchy;
  DifficultySchedule schedule;
  AssetAllocation assets;
  std::vector<ScenarioReplica> replicas;
  std::vector<ScenarioStep> steps;
};

/// Parses the JSON scenario format (see docs/scenario-format.md). Throws
/// Error(config_parse) on malformed text, Error(scenario_invalid) on
/// inconsistent content.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

/// Three-order example: B1..B4 on one slice of a three-order
/// hierarchy with achieved orders 3, 2, 3, 1.
Scenario fig3_scenario();

/// A parent-canonical coincident block pins a child chain against a longer
/// child fork, and parent reorgs drive the child chain away and back.
Scenario coincident_reorg_scenario();

/// Names of the scenarios shipped with the library.
std::vector<std::string> builtin_scenarios();
Scenario builtin_scenario(const std::string& name);

struct CheckResult {
  std::string checkpoint;
  std::string replica;
  std::string assertion;
  bool passed = false;
  std::string detail;
};

struct ScenarioReport {
  std::string name;
  std::size_t blocks = 0;
  std::vector<CheckResult> checks;

  bool passed() const;
  std::vector<CheckResult> failures() const;
};

ScenarioReport run_scenario(const Scenario& scenario);

}  // namespace blockreduce
