#include "blockreduce/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "blockreduce/error.hpp"

namespace blockreduce {

namespace {

double sample_stderr(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

double mean_of(const std::vector<double>& xs) {
  return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Evenly spaced local vertices, at most `count` of them.
std::vector<std::uint32_t> spaced_sources(std::size_t size, std::size_t count) {
  std::vector<std::uint32_t> out;
  const std::size_t k = std::max<std::size_t>(1, std::min(size, count));
  for (std::size_t i = 0; i < k; ++i) out.push_back(static_cast<std::uint32_t>(i * size / k));
  return out;
}

}  // namespace

std::string format_number(double value) {
  if (value == 0.0) return "0";  // also folds -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::vector<SeedResult> simulate_seeds(const SimConfig& base, const std::vector<std::uint64_t>& seeds,
                                       int parallel) {
  base.validate();
  std::vector<SeedResult> out(seeds.size());
  for_each_trial(seeds.size(), parallel, [&](std::size_t i) {
    SimConfig cfg = base;
    cfg.seed = seeds[i];
    out[i].seed = seeds[i];
    out[i].trace = cfg.adversary.beta > 0.0 ? run_adversary(cfg) : run(cfg);
    out[i].metrics = measure(out[i].trace);
  });
  return out;
}

std::string metrics_csv(const std::vector<SeedResult>& results) {
  std::ostringstream os;
  os << "seed,chain,order,blocks_found,blocks_canonical,honest_found,honest_canonical,found_rate,"
        "effective_rate,efficiency,honest_efficiency,measured_delay,cross_injected,cross_committed,"
        "cross_settled,settlement_mean_latency,settlement_max_latency,issues\n";
  for (const auto& r : results) {
    const auto& s = r.metrics.settlement;
    for (const auto& c : r.metrics.chains) {
      os << r.seed << ",\"" << c.chain.to_string() << "\"," << c.chain.order() << ',' << c.blocks_found << ','
         << c.blocks_canonical << ',' << c.honest_found << ',' << c.honest_canonical << ','
         << format_number(c.found_rate) << ',' << format_number(c.effective_rate) << ','
         << format_number(c.efficiency) << ',' << format_number(c.honest_efficiency) << ','
         << format_number(c.measured_delay) << ',' << s.injected_cross << ',' << s.committed_cross << ','
         << s.settled << ',' << format_number(s.mean_latency) << ',' << format_number(s.max_latency) << ','
         << r.trace.issues.size() << '\n';
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------

SimConfig single_chain_config(std::size_t nodes, double lambda, double delta, double expected_blocks,
                              std::uint64_t seed, double beta) {
  SimConfig cfg;
  cfg.hierarchy = HierarchyConfig{1, {}};
  cfg.schedule = DifficultySchedule({1.0});
  cfg.network.nodes = nodes;
  cfg.network.degree = static_cast<int>(nodes) - 1;
  cfg.network.delay = DelayModel::constant_delay(delta);
  cfg.rates = {lambda};
  cfg.duration = expected_blocks / lambda;
  cfg.seed = seed;
  cfg.check_consistency = false;
  if (beta > 0.0) {
    cfg.adversary.beta = beta;
    cfg.adversary.target = ChainPath::root();
    cfg.adversary.strategy = AdversaryStrategy::withhold;
  }
  return cfg;
}

bool EfficiencyStudy::within(double sigmas) const {
  return std::abs(mean - predicted) <= sigmas * standard_error;
}

EfficiencyStudy efficiency_study(double load, double beta, std::size_t nodes, double expected_blocks,
                                 const std::vector<std::uint64_t>& seeds, int parallel) {
  const double delta = 1.0;
  const double lambda = load / delta;
  EfficiencyStudy study;
  study.load = load;
  study.beta = beta;
  study.predicted = efficiency(lambda, delta, beta);
  study.samples.resize(seeds.size());
  for_each_trial(seeds.size(), parallel, [&](std::size_t i) {
    const SimConfig cfg = single_chain_config(nodes, lambda, delta, expected_blocks, seeds[i], beta);
    const TraceRecord trace = beta > 0.0 ? run_adversary(cfg) : run(cfg);
    const ChainMetrics c = measure(trace).chains.front();
    EfficiencySample& s = study.samples[i];
    s.seed = seeds[i];
    s.found = c.blocks_found;
    s.canonical = beta > 0.0 ? c.honest_canonical : c.blocks_canonical;
    s.efficiency = beta > 0.0 ? c.honest_efficiency : c.efficiency;
  });
  std::vector<double> xs;
  for (const auto& s : study.samples) xs.push_back(s.efficiency);
  study.mean = mean_of(xs);
  study.standard_error = sample_stderr(xs);
  return study;
}

// ---------------------------------------------------------------------------

double mean_broadcast_delay(const OverlayGraph& graph, std::size_t sources) {
  if (graph.size() < 2) return 0.0;
  double sum = 0.0;
  const auto src = spaced_sources(graph.size(), sources);
  for (std::uint32_t s : src) sum += broadcast_delay(graph, s);
  return sum / static_cast<double>(src.size());
}

double max_broadcast_delay(const OverlayGraph& graph, std::size_t sources) {
  double worst = 0.0;
  if (graph.size() < 2) return worst;
  for (std::uint32_t s : spaced_sources(graph.size(), sources)) worst = std::max(worst, broadcast_delay(graph, s));
  return worst;
}

double GossipStudy::fraction_within() const {
  if (trials.empty()) return 0.0;
  const auto ok = std::count_if(trials.begin(), trials.end(), [](const GossipTrial& t) { return t.within; });
  return static_cast<double>(ok) / static_cast<double>(trials.size());
}

GossipStudy gossip_study(std::size_t nodes, int degree, double delta, const std::vector<std::uint64_t>& seeds,
                         std::size_t sources) {
  GossipStudy study;
  study.nodes = nodes;
  study.degree = degree;
  study.delta = delta;
  const double bound = delay_bound(delta, degree, static_cast<double>(nodes));
  for (std::uint64_t seed : seeds) {
    const OverlayGraph g = generate_overlay(nodes, degree, DelayModel::constant_delay(delta), seed);
    GossipTrial t;
    t.seed = seed;
    t.measured = max_broadcast_delay(g, sources);
    t.bound = bound;
    t.within = t.measured <= bound;
    study.trials.push_back(t);
  }
  return study;
}

std::vector<SubnetworkDelay> subnetwork_delay_curve(std::size_t nodes, int degree, const DelayModel& model,
                                                    const std::vector<std::uint32_t>& qs,
                                                    const std::vector<std::uint64_t>& seeds, std::size_t sources) {
  std::vector<SubnetworkDelay> out;
  for (std::uint32_t q : qs) {
    if (q < 1 || nodes / q <= static_cast<std::size_t>(degree)) {
      throw Error(ErrorKind::domain_error, "sub-network of N/q nodes must exceed the degree");
    }
    SubnetworkDelay p;
    p.q = q;
    p.size = nodes / q;
    double sum = 0.0;
    for (std::uint64_t seed : seeds) {
      sum += mean_broadcast_delay(generate_overlay(p.size, degree, model, seed), sources);
    }
    p.mean_delay = sum / static_cast<double>(seeds.size());
    p.bound = delay_bound(model.kind == DelayModel::Kind::latent_position ? model.base : model.mean, degree,
                          static_cast<double>(p.size));
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------

void SweepSpec::validate() const {
  auto bad = [](const std::string& msg) { throw Error(ErrorKind::config_invalid, msg); };
  if (qs.empty()) bad("sweep needs at least one q");
  if (std::find(qs.begin(), qs.end(), 1u) == qs.end()) bad("sweep needs q = 1 as its baseline");
  for (std::uint32_t q : qs) {
    if (q < 1) bad("q must be at least 1");
    if (nodes / q < 2) bad("every sub-network needs at least two nodes");
  }
  if (degree < 1) bad("degree must be positive");
  delay.validate();
  if (!(root_load > 0.0)) bad("root load must be positive");
  if (!(root_blocks > 0.0)) bad("root block count must be positive");
  if (calibration_sources < 1) bad("calibration needs at least one source");
}

SimConfig sweep_config(const SweepSpec& spec, std::uint32_t q, std::uint64_t seed) {
  SimConfig cfg;
  if (q == 1) {
    cfg.hierarchy = HierarchyConfig{1, {}};
    cfg.schedule = DifficultySchedule({1.0});
    cfg.rates = {1.0};
  } else {
    cfg.hierarchy = HierarchyConfig{2, {q}};
    cfg.schedule = DifficultySchedule({0.5 / q, 1.0});
    cfg.rates = {0.5, static_cast<double>(q)};
  }
  cfg.network.nodes = spec.nodes;
  cfg.network.degree = spec.degree;
  cfg.network.delay = spec.delay;
  cfg.network.policy = spec.policy;
  cfg.seed = seed;
  cfg.check_consistency = false;
  return cfg;
}

Calibration calibrate(const SweepSpec& spec, std::uint32_t q, std::uint64_t seed) {
  const SimConfig cfg = sweep_config(spec, q, seed);
  const SubnetworkAssignment net = simulation_network(cfg);
  Calibration c;
  c.q = q;
  c.seed = seed;
  c.delta_root = mean_broadcast_delay(net.overlays.at(ChainPath::root()), spec.calibration_sources);
  if (q == 1) {
    c.delta_sub = c.delta_root;
  } else {
    double sum = 0.0;
    for (const auto& chain : cfg.hierarchy.chains_of_order(2)) {
      sum += mean_broadcast_delay(net.overlays.at(chain), spec.calibration_sources);
    }
    c.delta_sub = sum / static_cast<double>(q);
  }
  if (!(c.delta_root > 0.0) || !(c.delta_sub > 0.0)) {
    throw Error(ErrorKind::domain_error, "calibration measured a zero network delay");
  }
  c.lambda_root = spec.root_load / c.delta_root;
  c.lambda_sub = c.lambda_root * c.delta_root / c.delta_sub;
  return c;
}

SimConfig calibrated_config(const SweepSpec& spec, const Calibration& cal) {
  SimConfig cfg = sweep_config(spec, cal.q, cal.seed);
  cfg.duration = spec.root_blocks / cal.lambda_root;
  if (cal.q == 1) {
    cfg.rates = {cal.lambda_root};
    return cfg;
  }
  const double leaf_total = static_cast<double>(cal.q) * cal.lambda_sub;
  if (!(cal.lambda_root < leaf_total)) {
    throw Error(ErrorKind::domain_error, "calibrated order-2 rate does not exceed the root rate");
  }
  cfg.schedule = DifficultySchedule({cal.lambda_root / leaf_total, 1.0});
  cfg.rates = {cal.lambda_root, leaf_total};
  return cfg;
}

bool SweepResult::superlinear() const {
  return std::all_of(points.begin(), points.end(), [](const SweepPoint& p) { return p.q == 1 || p.ratio > 1.0; });
}

bool SweepResult::nondecreasing() const {
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].ratio < points[i - 1].ratio) return false;
  }
  return true;
}

SweepResult run_scaling_sweep(const SweepSpec& spec, const std::vector<std::uint64_t>& seeds, int parallel) {
  spec.validate();
  if (seeds.empty()) throw Error(ErrorKind::config_invalid, "sweep needs at least one seed");
  std::vector<std::uint32_t> qs = spec.qs;
  std::sort(qs.begin(), qs.end());
  qs.erase(std::unique(qs.begin(), qs.end()), qs.end());

  struct Job {
    std::uint32_t q;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::uint32_t q : qs) {
    for (std::uint64_t s : seeds) jobs.push_back({q, s});
  }
  std::vector<Calibration> cals(jobs.size());
  std::vector<std::vector<SweepRow>> rows(jobs.size());
  for_each_trial(jobs.size(), parallel, [&](std::size_t i) {
    const Calibration cal = calibrate(spec, jobs[i].q, jobs[i].seed);
    cals[i] = cal;
    const TraceMetrics m = measure(run(calibrated_config(spec, cal)));
    // Throughput order: the root for the single-chain baseline, order 2
    // otherwise. The root row is reported for context.
    for (int order = 1; order <= (cal.q == 1 ? 1 : 2); ++order) {
      SweepRow r;
      r.q = cal.q;
      r.order = order;
      r.seed = cal.seed;
      r.chains = order == 1 ? 1 : cal.q;
      r.lambda_configured = order == 1 ? cal.lambda_root : cal.lambda_sub;
      r.delta_calibrated = order == 1 ? cal.delta_root : cal.delta_sub;
      double eff = 0.0, star = 0.0, spread = 0.0;
      for (const auto& c : m.chains) {
        if (c.chain.order() != order) continue;
        eff += c.efficiency;
        star += c.effective_rate;
        spread += c.measured_delay;
      }
      const double n = static_cast<double>(r.chains);
      r.efficiency = eff / n;
      r.lambda_star = star / n;
      r.delta_measured = spread / n;
      r.aggregate = star;
      r.lambda_star_predicted = effective_rate(r.lambda_configured, r.delta_calibrated);
      rows[i].push_back(r);
    }
  });

  SweepResult out;
  out.calibrations = cals;
  for (auto& rs : rows) out.rows.insert(out.rows.end(), rs.begin(), rs.end());

  std::map<std::uint32_t, std::vector<double>> aggregates;
  for (const auto& r : out.rows) {
    const int throughput_order = r.q == 1 ? 1 : 2;
    if (r.order == throughput_order) aggregates[r.q].push_back(r.aggregate);
  }
  const double base = mean_of(aggregates.at(1));
  for (std::uint32_t q : qs) {
    SweepPoint p;
    p.q = q;
    p.aggregate_mean = mean_of(aggregates.at(q));
    p.aggregate_stderr = sample_stderr(aggregates.at(q));
    p.ratio = base > 0.0 ? p.aggregate_mean / (static_cast<double>(q) * base) : 0.0;
    out.points.push_back(p);
  }
  return out;
}

std::string sweep_csv(const SweepResult& result) {
  std::ostringstream os;
  os << "q,order,seed,chains,lambda_configured,delta_calibrated,delta_measured,efficiency_measured,"
        "lambda_star_measured,lambda_star_predicted,aggregate_lambda_star\n";
  for (const auto& r : result.rows) {
    os << r.q << ',' << r.order << ',' << r.seed << ',' << r.chains << ',' << format_number(r.lambda_configured)
       << ',' << format_number(r.delta_calibrated) << ',' << format_number(r.delta_measured) << ','
       << format_number(r.efficiency) << ',' << format_number(r.lambda_star) << ','
       << format_number(r.lambda_star_predicted) << ',' << format_number(r.aggregate) << '\n';
  }
  return os.str();
}

}  // namespace blockreduce
