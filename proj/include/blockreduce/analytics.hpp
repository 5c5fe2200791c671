#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "blockreduce/hierarchy.hpp"
#include "blockreduce/simulation.hpp"

namespace blockreduce {

/// Coefficient of the gossip delay bound for a d-regular overlay:
/// C_d = 1/ln(2(1 - 1/d)) - 1/(d ln(1 - 1/d)). Requires d >= 3.
double c_d(int d);

/// δ · C_d · ln(size): bound on the broadcast delay of a sub-network of
/// `subnetwork_size` nodes with mean link delay δ.
double delay_bound(double delta, int d, double subnetwork_size);

/// PoW efficiency: 1/(1+λΔ), or (1-β)/(1+(1-β)λΔ) with an adversary of
/// hash fraction β.
double efficiency(double lambda, double network_delay, double beta = 0.0);

/// Canonical block rate λ·E.
double effective_rate(double lambda, double network_delay, double beta = 0.0);

struct ModelParams {
  int d = 8;
  double nodes = 1000.0;
  double delta = 1.0;                  // mean link delay of the full network
  std::optional<double> delta_r;       // mean link delay inside order-r sub-networks
  double lambda1 = 0.01;               // root block rate
  double beta = 0.0;

  /// Throws Error(domain_error) when outside the model's assumptions.
  void validate() const;
  double delta_sub() const { return delta_r.value_or(delta); }
};

/// Prediction for q equal order-r chains with efficiency held at the root's.
struct ScalingPoint {
  std::uint32_t q = 1;
  double delay_root = 0.0;        // Δ_1 bound
  double delay_sub = 0.0;         // Δ_1 - δ_r C_d ln q
  double lambda_r = 0.0;          // per-chain rate with E_r = E_1
  double lambda_star = 0.0;       // per-chain canonical rate (lower bound)
  double aggregate = 0.0;         // q · lambda_star
  double superlinearity = 1.0;    // aggregate(q) / (q · aggregate(1))
};

/// Throws Error(q_too_large) when δ_r C_d ln q >= Δ_1 for some q.
std::vector<ScalingPoint> scaling_curve(const ModelParams& params, const std::vector<std::uint32_t>& qs);

/// Empirical per-chain metrics from a finished trace.
struct ChainMetrics {
  ChainPath chain;
  std::size_t blocks_found = 0;
  std::size_t blocks_canonical = 0;
  std::size_t honest_found = 0;
  std::size_t honest_canonical = 0;
  double duration = 0.0;
  double found_rate = 0.0;
  double effective_rate = 0.0;  // λ*: canonical blocks per time unit
  double efficiency = 0.0;      // canonical / found
  double honest_efficiency = 0.0;  // honest canonical / all found
  double measured_delay = 0.0;  // mean largest delivery delay over the chain's blocks
};

struct SettlementStats {
  std::size_t injected_cross = 0;
  std::size_t committed_cross = 0;
  std::size_t settled = 0;
  double mean_latency = 0.0;  // settlement time minus commit time
  double max_latency = 0.0;
};

struct TraceMetrics {
  std::vector<ChainMetrics> chains;  // all chains, root first
  SettlementStats settlement;
  std::vector<std::string> warnings;
};

TraceMetrics measure(const TraceRecord& trace);

}  // namespace blockreduce
