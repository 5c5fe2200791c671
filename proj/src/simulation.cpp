#include "blockreduce/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <queue>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "blockreduce/error.hpp"
#include "blockreduce/ledger.hpp"
#include "blockreduce/replica.hpp"

namespace blockreduce {

std::string to_string(AdversaryStrategy s) {
  return s == AdversaryStrategy::withhold ? "withhold" : "omit-coincident";
}

AdversaryStrategy parse_adversary_strategy(const std::string& text) {
  if (text == "withhold") return AdversaryStrategy::withhold;
  if (text == "omit-coincident") return AdversaryStrategy::omit_coincident;
  throw Error(ErrorKind::config_invalid, "unknown adversary strategy '" + text + "'");
}

std::vector<double> SimConfig::rates_from_schedule(const DifficultySchedule& schedule, double leaf_rate) {
  std::vector<double> out;
  const double pr = schedule.threshold(schedule.num_orders());
  for (double p : schedule.thresholds()) out.push_back(leaf_rate * p / pr);
  return out;
}

void SimConfig::validate() const {
  auto bad = [](const std::string& msg) { throw Error(ErrorKind::config_invalid, msg); };
  hierarchy.validate();
  if (schedule.num_orders() != hierarchy.num_orders) bad("schedule must have one threshold per order");
  if (rates.size() != static_cast<std::size_t>(hierarchy.num_orders)) bad("rates must have one entry per order");
  for (double r : rates) {
    if (!(r > 0.0) || !std::isfinite(r)) bad("block rates must be positive");
  }
  const double pr = schedule.thresholds().back();
  for (std::size_t k = 0; k < rates.size(); ++k) {
    const double want = schedule.thresholds()[k] / pr;
    const double got = rates[k] / rates.back();
    if (std::abs(got - want) > 1e-9 * std::max(1.0, want)) {
      bad("rates must follow the schedule: lambda_r / lambda_R = p_r / p_R");
    }
  }
  network.delay.validate();
  if (network.nodes < hierarchy.leaves().size()) bad("fewer nodes than leaves");
  if (network.degree < 1) bad("degree must be positive");
  if (!(adversary.beta >= 0.0 && adversary.beta < 1.0)) bad("beta must lie in [0, 1)");
  if (adversary.beta > 0.0) {
    if (!hierarchy.contains(adversary.target) || adversary.target.order() != hierarchy.num_orders) {
      bad("adversary target must be a leaf chain");
    }
    if (network.nodes < 2) bad("adversary needs at least one honest node");
  }
  if (workload.tx_rate < 0.0) bad("tx_rate must be non-negative");
  if (!(workload.same_chain_fraction >= 0.0 && workload.same_chain_fraction <= 1.0)) {
    bad("same_chain_fraction must lie in [0, 1]");
  }
  if (workload.tx_rate > 0.0 && workload.assets_per_chain == 0) bad("a workload needs assets");
  if (workload.accounts == 0) bad("accounts must be positive");
  if (!(duration > 0.0)) bad("duration must be positive");
  if (!(check_interval > 0.0)) bad("check_interval must be positive");
}

std::size_t TraceRecord::issue_count(const std::string& kind) const {
  return static_cast<std::size_t>(
      std::count_if(issues.begin(), issues.end(), [&](const IssueTrace& i) { return i.kind == kind; }));
}

namespace {

enum class EventKind { deliver, mine, inject, check };

struct Event {
  double time;
  std::uint64_t seq;
  EventKind kind;
  std::uint32_t node;
  BlockId block;
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;
  }
};

class Simulator {
 public:
  explicit Simulator(const SimConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {}

  TraceRecord run();

 private:
  void setup();
  void schedule(double t, EventKind kind, std::uint32_t node = 0, BlockId block = 0);
  BlockId fresh_id();
  void on_mine(double t);
  void on_deliver(double t, std::uint32_t node, BlockId id);
  void on_inject(double t);
  void check_all(double t, bool final);
  void publish(const BlockPtr& b, std::uint32_t source, double t);
  Replica::ReceiveResult deliver_to(Replica& r, const BlockPtr& b, double t, bool honest);
  void observe(const BlockPtr& b, double t);
  std::vector<std::vector<Transaction>> bodies_for(const Replica& r, const ChainPath& leaf, int achieved,
                                                   double t);
  const std::vector<double>& arrivals(std::size_t chain, std::uint32_t node);
  void issue(double t, std::string kind, std::string detail);
  void adversary_mine(double t, int achieved);
  void adversary_heard(double t, const std::vector<BlockId>& admitted);

  const SimConfig& cfg_;
  std::mt19937_64 rng_;
  TraceRecord trace_;
  SubnetworkAssignment net_;
  std::vector<ChainPath> chains_;
  BlockPtr genesis_;
  std::vector<std::unique_ptr<Replica>> nodes_;
  std::unique_ptr<Replica> observer_;
  std::priority_queue<Event, std::vector<Event>, EventLater> queue_;
  std::uint64_t seq_ = 0;
  std::unordered_set<BlockId> used_ids_;
  std::unordered_map<BlockId, BlockPtr> blocks_;
  std::unordered_map<BlockId, std::size_t> trace_index_;
  std::discrete_distribution<std::uint32_t> miner_pick_;
  std::vector<std::vector<Transaction>> pools_;
  std::map<std::pair<std::size_t, std::uint32_t>, std::vector<double>> arrival_cache_;
  std::vector<std::vector<std::uint32_t>> members_;  // per chain, sorted global ids
  TxId next_tx_ = 1;
  double now_ = 0.0;
  double prune_age_ = 100.0;

  // Adversary state.
  int adv_node_ = -1;
  std::size_t adv_chain_ = 0;  // index of the target in the adversary's forest
  BlockId adv_tip_ = genesis_id;
  std::uint64_t adv_height_ = 0;
  BlockId public_best_ = genesis_id;
  bool adv_forked_ = false;
  std::vector<BlockPtr> withheld_;
  std::unordered_set<BlockId> adversarial_;
};

void Simulator::schedule(double t, EventKind kind, std::uint32_t node, BlockId block) {
  queue_.push(Event{t, seq_++, kind, node, block});
}

BlockId Simulator::fresh_id() {
  for (;;) {
    const BlockId id = rng_();
    if (id != genesis_id && used_ids_.insert(id).second) return id;
  }
}

void Simulator::issue(double t, std::string kind, std::string detail) {
  trace_.issues.push_back(IssueTrace{t, std::move(kind), std::move(detail)});
}

void Simulator::setup() {
  cfg_.validate();
  chains_ = cfg_.hierarchy.all_chains();
  trace_.chains = chains_;
  trace_.seed = cfg_.seed;
  genesis_ = make_genesis(cfg_.hierarchy);
  net_ = simulation_network(cfg_);
  rng_.discard(1);
  for (const auto& c : chains_) members_.push_back(net_.members(c));
  prune_age_ = 100.0 * std::max(cfg_.workload.visibility_delay, 1e-9);

  AssetAllocation allocation;
  AssetId next_asset = 1;
  std::uniform_int_distribution<AccountId> account(1, cfg_.workload.accounts);
  for (const auto& c : chains_) {
    auto& m = allocation[c];
    for (std::size_t j = 0; j < cfg_.workload.assets_per_chain; ++j) m[next_asset++] = account(rng_);
  }

  const std::size_t n = cfg_.network.nodes;
  for (std::uint32_t v = 0; v < n; ++v) {
    nodes_.push_back(std::make_unique<Replica>(cfg_.hierarchy, cfg_.schedule,
                                               mining_slice(net_.membership[v], cfg_.hierarchy), genesis_,
                                               allocation));
  }
  observer_ = Replica::observer(cfg_.hierarchy, cfg_.schedule, genesis_, allocation);
  trace_.replicas = n + 1;

  std::vector<double> shares(n, 1.0 / static_cast<double>(n));
  if (cfg_.adversary.beta > 0.0) {
    for (std::uint32_t v = 0; v < n; ++v) {
      if (net_.membership[v] == cfg_.adversary.target) {
        adv_node_ = static_cast<int>(v);
        break;
      }
    }
    if (adv_node_ < 0) throw Error(ErrorKind::config_invalid, "no node mines the adversary's target chain");
    adv_chain_ = *nodes_[static_cast<std::size_t>(adv_node_)]->forest().tracked_index(cfg_.adversary.target);
    for (std::uint32_t v = 0; v < n; ++v) {
      shares[v] = static_cast<int>(v) == adv_node_ ? cfg_.adversary.beta
                                                   : (1.0 - cfg_.adversary.beta) / static_cast<double>(n - 1);
    }
  }
  miner_pick_ = std::discrete_distribution<std::uint32_t>(shares.begin(), shares.end());
  pools_.assign(chains_.size(), {});
}

const std::vector<double>& Simulator::arrivals(std::size_t chain, std::uint32_t node) {
  auto key = std::make_pair(chain, node);
  auto it = arrival_cache_.find(key);
  if (it != arrival_cache_.end()) return it->second;
  const auto& mem = members_[chain];
  const auto local = static_cast<std::uint32_t>(std::lower_bound(mem.begin(), mem.end(), node) - mem.begin());
  return arrival_cache_.emplace(key, propagate(net_.overlays.at(chains_[chain]), local)).first->second;
}

void Simulator::publish(const BlockPtr& b, std::uint32_t source, double t) {
  std::map<std::uint32_t, double> first;
  auto& bt = trace_.blocks[trace_index_.at(b->id)];
  bt.published_time = t;
  bt.spread.clear();
  for (int k = b->achieved_order; k <= cfg_.hierarchy.num_orders; ++k) {
    const std::size_t c = cfg_.hierarchy.index_of(b->leaf.prefix(k));
    const auto& arr = arrivals(c, source);
    const auto& mem = members_[c];
    double spread = 0.0;
    for (std::size_t i = 0; i < mem.size(); ++i) {
      spread = std::max(spread, arr[i]);
      auto [it, inserted] = first.try_emplace(mem[i], arr[i]);
      if (!inserted) it->second = std::min(it->second, arr[i]);
    }
    bt.spread.push_back(spread);
  }
  for (const auto& [v, dt] : first) {
    if (v != source) schedule(t + dt, EventKind::deliver, v, b->id);
  }
  observe(b, t);
}

void Simulator::observe(const BlockPtr& b, double t) {
  auto res = observer_->receive(b, t);
  if (res.admission.result == AdmissionResult::rejected) {
    issue(t, "invariant", "observer rejected block " + std::to_string(b->id) + ": " +
                              observer_->forest().record(b->id).reason);
  }
  for (const auto& f : res.failures) {
    issue(t, "invariant", "observer could not apply block " + std::to_string(f.block) + ": " + f.reason);
  }
  if (!cfg_.check_consistency) return;
  if (auto v = check_conservation(observer_->forest(), observer_->ledger())) issue(t, "conservation", *v);
  if (auto v = check_settlement_safety(observer_->forest(), observer_->ledger(), observer_->tracker())) {
    issue(t, "settlement", *v);
  }
}

Replica::ReceiveResult Simulator::deliver_to(Replica& r, const BlockPtr& b, double t, bool honest) {
  auto res = r.receive(b, t);
  if (!honest) return res;
  for (const auto& f : res.failures) {
    issue(t, "invariant", "replica could not apply block " + std::to_string(f.block) + ": " + f.reason);
  }
  if (cfg_.adversary.strategy == AdversaryStrategy::omit_coincident && !adversarial_.empty()) {
    for (const auto& p : res.plans) {
      for (BlockId id : p.apply) {
        if (adversarial_.count(id)) {
          issue(t, "adversary-canonical",
                "adversary block " + std::to_string(id) + " became canonical in " + p.chain.to_string());
        }
      }
    }
  }
  return res;
}

std::vector<std::vector<Transaction>> Simulator::bodies_for(const Replica& r, const ChainPath& leaf, int achieved,
                                                            double t) {
  std::vector<std::vector<Transaction>> bodies;
  for (int k = achieved; k <= cfg_.hierarchy.num_orders; ++k) {
    const ChainPath chain = leaf.prefix(k);
    const auto& state = r.ledger().state(chain);
    std::map<AssetId, std::optional<AccountId>> changed;
    std::vector<Transaction> body;
    for (const auto& tx : pools_[cfg_.hierarchy.index_of(chain)]) {
      if (body.size() >= cfg_.workload.max_txs_per_body) break;
      if (tx.injected_time + cfg_.workload.visibility_delay > t) break;
      if (state.applied_txs.count(tx.id)) continue;
      std::optional<AccountId> owner;
      if (auto c = changed.find(tx.asset); c != changed.end()) {
        owner = c->second;
      } else if (auto o = state.owned_assets.find(tx.asset); o != state.owned_assets.end()) {
        owner = o->second;
      }
      if (!owner || *owner != tx.sender) continue;
      changed[tx.asset] = tx.is_cross_chain() ? std::nullopt : std::optional<AccountId>(tx.new_owner);
      body.push_back(tx);
    }
    bodies.push_back(std::move(body));
  }
  return bodies;
}

void Simulator::on_mine(double t) {
  const std::uint32_t miner = miner_pick_(rng_);
  const double pr = cfg_.schedule.thresholds().back();
  const double sample = std::uniform_real_distribution<double>(0.0, pr)(rng_);
  const int achieved = classify_order(sample, cfg_.schedule);
  if (static_cast<int>(miner) == adv_node_) {
    adversary_mine(t, achieved);
    return;
  }
  Replica& r = *nodes_[miner];
  const ChainPath& leaf = net_.membership[miner];
  const BlockId id = fresh_id();
  auto block = r.build_block(id, leaf, achieved, bodies_for(r, leaf, achieved, t), t, miner);
  blocks_.emplace(id, block);
  trace_index_.emplace(id, trace_.blocks.size());
  trace_.blocks.push_back(BlockTrace{id, leaf, achieved, miner, false, t, t, {}});
  deliver_to(r, block, t, true);
  publish(block, miner, t);
}

void Simulator::adversary_mine(double t, int /*achieved*/) {
  Replica& r = *nodes_[static_cast<std::size_t>(adv_node_)];
  const auto& forest = r.forest();
  if (cfg_.adversary.strategy == AdversaryStrategy::omit_coincident && !adv_forked_) {
    // Fork from just before the latest canonical block the target shares with
    // its parent; without one there is nothing to omit yet.
    const auto& list = r.tracker().canonical(adv_chain_);
    const ChainPath parent_chain = parent(cfg_.adversary.target);
    for (std::size_t h = list.size(); h-- > 1;) {
      if (forest.block(list[h]).member_of(parent_chain)) {
        adv_tip_ = list[h - 1];
        adv_height_ = h - 1;
        adv_forked_ = true;
        break;
      }
    }
    if (!adv_forked_) return;
  }
  const int R = cfg_.hierarchy.num_orders;
  auto b = std::make_shared<Block>();
  b->id = fresh_id();
  b->leaf = cfg_.adversary.target;
  b->achieved_order = R;
  b->predecessors = {adv_tip_};
  b->bodies = {{}};
  b->found_time = t;
  b->miner = static_cast<std::uint32_t>(adv_node_);
  BlockPtr block = b;
  adversarial_.insert(b->id);
  blocks_.emplace(b->id, block);
  trace_index_.emplace(b->id, trace_.blocks.size());
  trace_.blocks.push_back(BlockTrace{b->id, b->leaf, R, b->miner, true, t, t, {}});
  r.receive(block, t);
  adv_tip_ = b->id;
  ++adv_height_;
  if (cfg_.adversary.strategy == AdversaryStrategy::omit_coincident) {
    publish(block, b->miner, t);
  } else {
    withheld_.push_back(block);
  }
}

void Simulator::adversary_heard(double t, const std::vector<BlockId>& admitted) {
  if (cfg_.adversary.strategy != AdversaryStrategy::withhold) return;
  const auto& forest = nodes_[static_cast<std::size_t>(adv_node_)]->forest();
  for (BlockId id : admitted) {
    if (adversarial_.count(id) || !forest.is_valid(id) || !forest.is_member(id, adv_chain_)) continue;
    if (better_tip(forest, adv_chain_, id, public_best_)) public_best_ = id;
  }
  const auto public_height = forest.height(public_best_, adv_chain_);
  if (public_height > adv_height_) {
    adv_tip_ = public_best_;
    adv_height_ = public_height;
    withheld_.clear();
  } else if (public_height == adv_height_ && !withheld_.empty()) {
    for (const auto& w : withheld_) publish(w, static_cast<std::uint32_t>(adv_node_), t);
    withheld_.clear();
  }
}

void Simulator::on_deliver(double t, std::uint32_t node, BlockId id) {
  const BlockPtr& b = blocks_.at(id);
  const bool honest = static_cast<int>(node) != adv_node_;
  auto res = deliver_to(*nodes_[node], b, t, honest);
  if (cfg_.record_deliveries) trace_.deliveries.push_back(DeliveryTrace{t, node, id});
  if (!honest) adversary_heard(t, res.admission.admitted);
}

void Simulator::on_inject(double t) {
  const std::size_t origin = std::uniform_int_distribution<std::size_t>(0, chains_.size() - 1)(rng_);
  const auto& state = observer_->ledger().state(origin);
  auto& pool = pools_[origin];
  // Prune transactions the observer applied long ago.
  pool.erase(std::remove_if(pool.begin(), pool.end(),
                            [&](const Transaction& tx) {
                              return state.applied_txs.count(tx.id) && t - tx.injected_time > prune_age_;
                            }),
             pool.end());
  std::set<AssetId> reserved;
  for (const auto& tx : pool) {
    if (!state.applied_txs.count(tx.id)) reserved.insert(tx.asset);
  }
  std::vector<std::pair<AssetId, AccountId>> candidates;
  for (const auto& [asset, owner] : state.owned_assets) {
    if (!reserved.count(asset)) candidates.emplace_back(asset, owner);
  }
  if (candidates.empty()) return;
  const auto [asset, owner] = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng_)];
  std::size_t dest = origin;
  if (chains_.size() > 1 && std::uniform_real_distribution<double>(0.0, 1.0)(rng_) >= cfg_.workload.same_chain_fraction) {
    dest = std::uniform_int_distribution<std::size_t>(0, chains_.size() - 2)(rng_);
    if (dest >= origin) ++dest;
  }
  Transaction tx;
  tx.id = next_tx_++;
  tx.origin = chains_[origin];
  tx.destination = chains_[dest];
  tx.asset = asset;
  tx.sender = owner;
  tx.new_owner = std::uniform_int_distribution<AccountId>(1, cfg_.workload.accounts)(rng_);
  tx.injected_time = t;
  pool.push_back(tx);
  trace_.txs.push_back(TxTrace{tx});
}

void Simulator::check_all(double t, bool final) {
  // Observer snapshot.
  SnapshotTrace snap;
  snap.time = t;
  const auto& view = observer_->view();
  for (std::size_t i = 0; i < view.lists.size(); ++i) {
    snap.tips.emplace_back(view.lists[i].back(), view.lists[i].size() - 1);
  }
  trace_.snapshots.push_back(std::move(snap));
  if (!cfg_.check_consistency) return;
  ++trace_.consistency_checks;

  // Replicas with the same tip on a chain hold the same partition.
  std::map<std::pair<std::size_t, BlockId>, const PartitionState*> reference;
  auto visit = [&](const Replica& r) {
    const auto& f = r.forest();
    for (std::size_t i = 0; i < f.tracked().size(); ++i) {
      const std::size_t c = cfg_.hierarchy.index_of(f.tracked()[i]);
      const auto key = std::make_pair(c, r.tracker().tip(i));
      auto [it, inserted] = reference.try_emplace(key, &r.ledger().state(i));
      if (inserted) continue;
      ++trace_.state_comparisons;
      if (auto d = check_state_consistency(*it->second, r.ledger().state(i))) {
        issue(t, "divergence", d->chain.to_string() + ": " + d->detail);
      }
    }
    if (auto v = check_conservation(f, r.ledger())) issue(t, "conservation", *v);
  };
  visit(*observer_);
  for (std::size_t v = 0; v < nodes_.size(); ++v) {
    if (static_cast<int>(v) != adv_node_) visit(*nodes_[v]);
  }
  if (final) {
    for (std::size_t v = 0; v < nodes_.size(); ++v) {
      if (nodes_[v]->forest().buffered_count() != 0) {
        trace_.drained = false;
        issue(t, "orphan", "node " + std::to_string(v) + " holds " +
                               std::to_string(nodes_[v]->forest().buffered_count()) + " buffered blocks");
      }
    }
  }
}

TraceRecord Simulator::run() {
  setup();
  const double lambda = cfg_.rates.back();
  std::exponential_distribution<double> next_block(lambda);
  schedule(next_block(rng_), EventKind::mine);
  if (cfg_.workload.tx_rate > 0.0) {
    schedule(std::exponential_distribution<double>(cfg_.workload.tx_rate)(rng_), EventKind::inject);
  }
  schedule(cfg_.check_interval, EventKind::check);

  while (!queue_.empty()) {
    const Event e = queue_.top();
    queue_.pop();
    now_ = e.time;
    switch (e.kind) {
      case EventKind::mine:
        on_mine(e.time);
        if (const double next = e.time + next_block(rng_); next < cfg_.duration) schedule(next, EventKind::mine);
        break;
      case EventKind::deliver:
        on_deliver(e.time, e.node, e.block);
        break;
      case EventKind::inject:
        on_inject(e.time);
        if (const double next = e.time + std::exponential_distribution<double>(cfg_.workload.tx_rate)(rng_);
            next < cfg_.duration) {
          schedule(next, EventKind::inject);
        }
        break;
      case EventKind::check:
        check_all(e.time, false);
        if (const double next = e.time + cfg_.check_interval; next < cfg_.duration) {
          schedule(next, EventKind::check);
        }
        break;
    }
  }
  trace_.end_time = cfg_.duration;
  trace_.drain_time = std::max(now_, cfg_.duration);
  check_all(trace_.drain_time, true);

  trace_.final_view = observer_->view();
  for (std::size_t i = 0; i < trace_.final_view.lists.size(); ++i) {
    const int k = trace_.final_view.chains[i].order();
    for (BlockId id : trace_.final_view.lists[i]) {
      if (id == genesis_id) continue;
      for (const auto& tx : blocks_.at(id)->body(k)) trace_.commits[tx.id] = id;
    }
  }
  for (const auto& s : observer_->ledger().states()) {
    for (const auto& [tx, c] : s.credits) trace_.settlements[tx] = {c.link1, c.link2};
  }
  return std::move(trace_);
}

}  // namespace

SubnetworkAssignment simulation_network(const SimConfig& config) {
  std::mt19937_64 rng(config.seed);
  return partition_network(config.network.nodes, config.hierarchy, config.network.policy, config.network.degree,
                           config.network.delay, rng());
}

TraceRecord run(const SimConfig& config) {
  SimConfig honest = config;
  honest.adversary.beta = 0.0;
  return Simulator(honest).run();
}

TraceRecord run_adversary(const SimConfig& config) {
  if (!(config.adversary.beta >= 0.0 && config.adversary.beta < 1.0)) {
    throw Error(ErrorKind::config_invalid, "run_adversary needs beta in [0, 1)");
  }
  return Simulator(config).run();
}

void write_trace_jsonl(const TraceRecord& trace, std::ostream& out, double from, double to) {
  using nlohmann::json;
  struct Line {
    double time;
    int rank;
    std::size_t seq;
    json record;
  };
  std::vector<Line> lines;
  std::size_t seq = 0;
  for (const auto& b : trace.blocks) {
    lines.push_back({b.found_time, 0, seq++,
                     json{{"t", b.found_time},
                          {"event", "block-found"},
                          {"block", b.id},
                          {"leaf", b.leaf.to_string()},
                          {"order", b.achieved_order},
                          {"miner", b.miner},
                          {"adversarial", b.adversarial}}});
    if (b.adversarial && b.published_time != b.found_time) {
      lines.push_back({b.published_time, 1, seq++,
                       json{{"t", b.published_time}, {"event", "block-released"}, {"block", b.id}}});
    }
  }
  for (const auto& d : trace.deliveries) {
    lines.push_back({d.time, 2, seq++,
                     json{{"t", d.time}, {"event", "block-delivered"}, {"node", d.node}, {"block", d.block}}});
  }
  for (const auto& x : trace.txs) {
    lines.push_back({x.tx.injected_time, 3, seq++,
                     json{{"t", x.tx.injected_time},
                          {"event", "tx-injected"},
                          {"tx", x.tx.id},
                          {"origin", x.tx.origin.to_string()},
                          {"destination", x.tx.destination.to_string()},
                          {"asset", x.tx.asset}}});
  }
  for (const auto& s : trace.snapshots) {
    json tips = json::object();
    for (std::size_t i = 0; i < s.tips.size(); ++i) {
      tips[trace.chains[i].to_string()] = json{{"tip", s.tips[i].first}, {"height", s.tips[i].second}};
    }
    lines.push_back({s.time, 4, seq++, json{{"t", s.time}, {"event", "snapshot"}, {"tips", tips}}});
  }
  for (const auto& i : trace.issues) {
    lines.push_back({i.time, 5, seq++, json{{"t", i.time}, {"event", "issue"}, {"kind", i.kind}, {"detail", i.detail}}});
  }
  std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.seq < b.seq;
  });
  for (const auto& l : lines) {
    if (l.time >= from && l.time <= to) out << l.record.dump() << '\n';
  }
  if (to < trace.drain_time) return;
  json settled = json::array();
  for (const auto& [tx, links] : trace.settlements) {
    json s{{"tx", tx}, {"link1", links.first}};
    if (links.second) s["link2"] = *links.second;
    settled.push_back(s);
  }
  out << json{{"t", trace.drain_time}, {"event", "end"}, {"drained", trace.drained}, {"settled", settled}}.dump()
      << '\n';
}

}  // namespace blockreduce
