#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "blockreduce/analytics.hpp"
#include "blockreduce/difficulty.hpp"
#include "blockreduce/experiments.hpp"
#include "blockreduce/hierarchy.hpp"
#include "blockreduce/netsim.hpp"
#include "blockreduce/simulation.hpp"

namespace blockreduce {

enum class ExperimentMode { simulate, analytic, scenario, scaling_sweep };

std::string to_string(ExperimentMode mode);
ExperimentMode parse_mode(const std::string& text);

struct TraceOptions {
  bool enabled = false;
  std::uint64_t max_bytes = 64ull << 20;  // traces larger than this are not written
};

/// One experiment, read from a single JSON file. Exactly one payload is used,
/// selected by `mode`; all randomness comes from `seeds`.
struct ExperimentConfig {
  ExperimentMode mode = ExperimentMode::simulate;
  std::string name = "experiment";
  std::string output_dir = "out";
  std::vector<std::uint64_t> seeds{1};
  int parallel = 1;
  TraceOptions trace;

  SimConfig simulation;                  // simulate
  ModelParams model;                     // analytic
  std::vector<std::uint32_t> model_qs{1, 2, 4, 8};
  std::vector<double> model_loads{0.05, 0.2, 1.0};
  std::string scenario;                  // scenario: built-in name or file path
  SweepSpec sweep;                       // scaling-sweep

  /// The parsed document, used for the config hash in the manifest.
  nlohmann::json source;
};

// Pieces shared by experiment configs and scenario files. All throw
// Error(config_invalid) on bad content.
HierarchyConfig parse_hierarchy(const nlohmann::json& j);
/// {"bits": [...]} (leading zero bits per order) or {"thresholds": [...]}.
DifficultySchedule parse_schedule(const nlohmann::json& j);
/// {"model": "constant"|"lognormal"|"latent-position", ...}.
DelayModel parse_delay_model(const nlohmann::json& j);
SimConfig parse_sim_config(const nlohmann::json& j);
ModelParams parse_model_params(const nlohmann::json& j);
SweepSpec parse_sweep_spec(const nlohmann::json& j);

/// Throws Error(config_parse) for malformed JSON and Error(config_invalid)
/// for content that breaks a rule.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

/// 64-bit FNV-1a of `text`, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace blockreduce
