#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "blockreduce/analytics.hpp"
#include "blockreduce/netsim.hpp"
#include "blockreduce/simulation.hpp"

namespace blockreduce {

/// Runs `count` independent jobs on up to `parallel` threads; job i writes
/// only its own result slot, so results do not depend on scheduling.
template <typename Fn>
void for_each_trial(std::size_t count, int parallel, Fn&& fn);

// ---------------------------------------------------------------------------
// Plain simulation runs

struct SeedResult {
  std::uint64_t seed = 0;
  TraceRecord trace;
  TraceMetrics metrics;
};

/// One simulation per seed (run_adversary when beta > 0), in seed order.
std::vector<SeedResult> simulate_seeds(const SimConfig& base, const std::vector<std::uint64_t>& seeds,
                                       int parallel = 1);

/// Per (seed, chain) metrics table. Fixed column set and number formatting,
/// so identical inputs give byte-identical text.
std::string metrics_csv(const std::vector<SeedResult>& results);

/// Shortest round-trip formatting used by every CSV writer.
std::string format_number(double value);

// ---------------------------------------------------------------------------
// PoW efficiency against 1/(1+λΔ)

/// Single chain on a complete graph with constant link delay, so every block
/// reaches every other node exactly `delta` after it is found and the
/// network delay is Δ = δ. Duration is chosen to produce `expected_blocks`.
SimConfig single_chain_config(std::size_t nodes, double lambda, double delta, double expected_blocks,
                              std::uint64_t seed, double beta = 0.0);

struct EfficiencySample {
  std::uint64_t seed = 0;
  std::size_t found = 0;
  std::size_t canonical = 0;
  double efficiency = 0.0;  // honest efficiency when beta > 0
};

struct EfficiencyStudy {
  double load = 0.0;  // λΔ
  double beta = 0.0;
  double predicted = 0.0;
  std::vector<EfficiencySample> samples;
  double mean = 0.0;
  double standard_error = 0.0;  // sample standard deviation / sqrt(seeds)

  /// |mean - predicted| <= sigmas * standard_error.
  bool within(double sigmas) const;
};

EfficiencyStudy efficiency_study(double load, double beta, std::size_t nodes, double expected_blocks,
                                 const std::vector<std::uint64_t>& seeds, int parallel = 1);

// ---------------------------------------------------------------------------
// Gossip delay against δ·C_d·ln N

/// Mean over `sources` evenly spaced sources of the broadcast delay.
double mean_broadcast_delay(const OverlayGraph& graph, std::size_t sources);

/// Largest broadcast delay over `sources` evenly spaced sources.
double max_broadcast_delay(const OverlayGraph& graph, std::size_t sources);

struct GossipTrial {
  std::uint64_t seed = 0;
  double measured = 0.0;  // largest broadcast delay over the sampled sources
  double bound = 0.0;
  bool within = false;
};

struct GossipStudy {
  std::size_t nodes = 0;
  int degree = 0;
  double delta = 0.0;
  std::vector<GossipTrial> trials;

  double fraction_within() const;
};

/// One random d-regular overlay with constant link delay δ per seed.
GossipStudy gossip_study(std::size_t nodes, int degree, double delta, const std::vector<std::uint64_t>& seeds,
                         std::size_t sources = 16);

struct SubnetworkDelay {
  std::uint32_t q = 1;
  std::size_t size = 0;
  double mean_delay = 0.0;
  double bound = 0.0;
};

/// Mean broadcast delay of a sub-network of N/q nodes, over seeds.
std::vector<SubnetworkDelay> subnetwork_delay_curve(std::size_t nodes, int degree, const DelayModel& model,
                                                    const std::vector<std::uint32_t>& qs,
                                                    const std::vector<std::uint64_t>& seeds,
                                                    std::size_t sources = 16);

// ---------------------------------------------------------------------------
// Throughput scaling over q order-2 chains

struct SweepSpec {
  std::vector<std::uint32_t> qs{1, 2, 4, 8};
  std::size_t nodes = 256;
  int degree = 8;
  DelayModel delay = DelayModel::lognormal_delay(1.0, 0.5);
  PartitionPolicy policy = PartitionPolicy::uniform;
  double root_load = 0.05;       // λ_1·Δ_1, fixing E_1
  double root_blocks = 1000.0;   // expected root blocks per run
  std::size_t calibration_sources = 32;

  /// Throws Error(config_invalid).
  void validate() const;
};

/// Measured delays of one seeded network and the rates that equalize the
/// efficiency of every chain with the root's.
struct Calibration {
  std::uint32_t q = 1;
  std::uint64_t seed = 0;
  double delta_root = 0.0;  // mean broadcast delay of the whole network
  double delta_sub = 0.0;   // mean broadcast delay over the q sub-networks
  double lambda_root = 0.0;
  double lambda_sub = 0.0;  // per order-2 chain
};

/// Hierarchy for a point of the sweep: one chain for q = 1, otherwise a root
/// with q order-2 children.
SimConfig sweep_config(const SweepSpec& spec, std::uint32_t q, std::uint64_t seed);

/// Measures the network sweep_config() builds and sets λ_1 = load/Δ_1 and
/// λ_2 = λ_1Δ_1/Δ_2 per chain, so that λ_2Δ_2 = λ_1Δ_1.
Calibration calibrate(const SweepSpec& spec, std::uint32_t q, std::uint64_t seed);

/// sweep_config() with the calibrated rates and schedule applied.
SimConfig calibrated_config(const SweepSpec& spec, const Calibration& cal);

struct SweepRow {
  std::uint32_t q = 1;
  int order = 1;
  std::uint64_t seed = 0;
  std::size_t chains = 1;
  double lambda_configured = 0.0;   // per chain
  double delta_calibrated = 0.0;
  double delta_measured = 0.0;      // mean block spread in the trace
  double efficiency = 0.0;          // mean over the chains
  double lambda_star = 0.0;         // mean canonical rate per chain
  double lambda_star_predicted = 0.0;  // λ/(1+λΔ) with the calibrated Δ
  double aggregate = 0.0;           // summed canonical rate over the chains
};

struct SweepPoint {
  std::uint32_t q = 1;
  double aggregate_mean = 0.0;
  double aggregate_stderr = 0.0;
  double ratio = 1.0;  // aggregate(q) / (q · aggregate(1))
};

struct SweepResult {
  std::vector<Calibration> calibrations;
  std::vector<SweepRow> rows;  // sorted by (q, seed, order)
  std::vector<SweepPoint> points;

  /// ratio > 1 for every q > 1.
  bool superlinear() const;
  /// ratio nondecreasing in q.
  bool nondecreasing() const;
};

/// Needs q = 1 among the points (it is the baseline).
SweepResult run_scaling_sweep(const SweepSpec& spec, const std::vector<std::uint64_t>& seeds, int parallel = 1);

std::string sweep_csv(const SweepResult& result);

}  // namespace blockreduce

#include "blockreduce/experiments_impl.hpp"
