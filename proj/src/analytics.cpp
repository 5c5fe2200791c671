#include "blockreduce/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "blockreduce/error.hpp"

namespace blockreduce {

double c_d(int d) {
  if (d < 3) throw Error(ErrorKind::domain_error, "C_d needs d >= 3, got " + std::to_string(d));
  const double x = 1.0 - 1.0 / static_cast<double>(d);
  return 1.0 / std::log(2.0 * x) - 1.0 / (static_cast<double>(d) * std::log(x));
}

double delay_bound(double delta, int d, double subnetwork_size) {
  if (!(subnetwork_size > 1.0)) {
    throw Error(ErrorKind::domain_error, "delay bound needs a sub-network of more than one node");
  }
  return delta * c_d(d) * std::log(subnetwork_size);
}

double efficiency(double lambda, double network_delay, double beta) {
  if (lambda < 0.0 || network_delay < 0.0 || !(beta >= 0.0 && beta < 1.0)) {
    throw Error(ErrorKind::domain_error, "efficiency needs lambda, delay >= 0 and beta in [0, 1)");
  }
  return (1.0 - beta) / (1.0 + (1.0 - beta) * lambda * network_delay);
}

double effective_rate(double lambda, double network_delay, double beta) {
  return lambda * efficiency(lambda, network_delay, beta);
}

void ModelParams::validate() const {
  if (d < 3) throw Error(ErrorKind::domain_error, "model needs d >= 3");
  if (!(nodes > d)) throw Error(ErrorKind::domain_error, "model needs N > d");
  if (!(delta > 0.0) || !(delta_sub() > 0.0)) throw Error(ErrorKind::domain_error, "link delays must be positive");
  if (!(lambda1 > 0.0)) throw Error(ErrorKind::domain_error, "lambda1 must be positive");
  if (!(beta >= 0.0 && beta < 1.0)) throw Error(ErrorKind::domain_error, "beta must lie in [0, 1)");
}

std::vector<ScalingPoint> scaling_curve(const ModelParams& params, const std::vector<std::uint32_t>& qs) {
  params.validate();
  const double delay_root = delay_bound(params.delta, params.d, params.nodes);
  const double lambda1_delay = params.lambda1 * delay_root;
  const double root_star = params.lambda1 / (1.0 + lambda1_delay);
  std::vector<ScalingPoint> out;
  for (std::uint32_t q : qs) {
    if (q < 1) throw Error(ErrorKind::domain_error, "q must be at least 1");
    ScalingPoint p;
    p.q = q;
    p.delay_root = delay_root;
    p.delay_sub = delay_root - params.delta_sub() * c_d(params.d) * std::log(static_cast<double>(q));
    if (!(p.delay_sub > 0.0)) {
      throw Error(ErrorKind::q_too_large, "q = " + std::to_string(q) +
                                              " leaves no positive sub-network delay in the model");
    }
    p.lambda_r = lambda1_delay / p.delay_sub;
    p.lambda_star = lambda1_delay / (p.delay_sub * (1.0 + lambda1_delay));
    p.aggregate = static_cast<double>(q) * p.lambda_star;
    p.superlinearity = p.aggregate / (static_cast<double>(q) * root_star);
    out.push_back(p);
  }
  return out;
}

TraceMetrics measure(const TraceRecord& trace) {
  TraceMetrics m;
  if (!trace.drained) m.warnings.push_back("trace-truncated: buffered blocks remained after the drain");
  std::unordered_map<BlockId, const BlockTrace*> by_id;
  for (const auto& b : trace.blocks) by_id.emplace(b.id, &b);

  for (std::size_t i = 0; i < trace.chains.size(); ++i) {
    const ChainPath& chain = trace.chains[i];
    ChainMetrics c;
    c.chain = chain;
    c.duration = trace.end_time;
    double spread_sum = 0.0;
    for (const auto& b : trace.blocks) {
      if (b.achieved_order > chain.order() || !chain.is_prefix_of(b.leaf)) continue;
      ++c.blocks_found;
      if (!b.adversarial) ++c.honest_found;
      const auto k = static_cast<std::size_t>(chain.order() - b.achieved_order);
      if (k < b.spread.size()) spread_sum += b.spread[k];
    }
    const auto vi = trace.final_view.index_of(chain);
    if (vi) {
      for (BlockId id : trace.final_view.lists[*vi]) {
        if (id == genesis_id) continue;
        ++c.blocks_canonical;
        auto it = by_id.find(id);
        if (it != by_id.end() && !it->second->adversarial) ++c.honest_canonical;
      }
    }
    if (c.duration > 0.0) {
      c.found_rate = static_cast<double>(c.blocks_found) / c.duration;
      c.effective_rate = static_cast<double>(c.blocks_canonical) / c.duration;
    }
    if (c.blocks_found) {
      c.efficiency = static_cast<double>(c.blocks_canonical) / static_cast<double>(c.blocks_found);
      c.honest_efficiency = static_cast<double>(c.honest_canonical) / static_cast<double>(c.blocks_found);
      c.measured_delay = spread_sum / static_cast<double>(c.blocks_found);
    }
    m.chains.push_back(c);
  }

  double latency_sum = 0.0;
  for (const auto& x : trace.txs) {
    if (!x.tx.is_cross_chain()) continue;
    ++m.settlement.injected_cross;
    auto commit = trace.commits.find(x.tx.id);
    if (commit == trace.commits.end()) continue;
    ++m.settlement.committed_cross;
    auto settled = trace.settlements.find(x.tx.id);
    if (settled == trace.settlements.end()) continue;
    const BlockId last = settled->second.second.value_or(settled->second.first);
    const double latency = by_id.at(last)->published_time - by_id.at(commit->second)->found_time;
    ++m.settlement.settled;
    latency_sum += latency;
    m.settlement.max_latency = std::max(m.settlement.max_latency, latency);
  }
  if (m.settlement.settled) m.settlement.mean_latency = latency_sum / static_cast<double>(m.settlement.settled);
  return m;
}

}  // namespace blockreduce
