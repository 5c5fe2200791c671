#include "blockreduce/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "blockreduce/config.hpp"
#include "blockreduce/error.hpp"
#include "blockreduce/replica.hpp"
#include "scenario_data.hpp"

namespace blockreduce {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorKind::scenario_invalid, msg); }

std::uint64_t parse_uint(const json& j, const std::string& what) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    std::size_t used = 0;
    try {
      const auto v = std::stoull(s, &used, 0);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
  }
  invalid(what + " must be a non-negative integer");
}

// A scripted "hash" is read as the top 16 bits of a PoW digest, i.e. a work
// sample of value / 2^16.
int order_from_hash(const std::string& hash, const DifficultySchedule& schedule) {
  std::size_t used = 0;
  unsigned long value = 0;
  try {
    value = std::stoul(hash, &used, 16);
  } catch (const std::exception&) {
    invalid("hash " + hash + " is not hexadecimal");
  }
  if (used != hash.size() || value > 0xFFFF) invalid("hash " + hash + " must be a 16-bit hex value");
  return classify_order(static_cast<double>(value) / 65536.0, schedule);
}

std::vector<std::string> name_list(const json& j, const std::string& what) {
  if (!j.is_array()) invalid(what + " must be a list of block names");
  std::vector<std::string> out;
  for (const auto& e : j) out.push_back(e.get<std::string>());
  return out;
}

template <typename T>
std::map<ChainPath, T> per_chain(const json& j, const std::string& what, T (*convert)(const json&, const std::string&)) {
  if (!j.is_object()) invalid(what + " must map chains to values");
  std::map<ChainPath, T> out;
  for (const auto& [key, value] : j.items()) out.emplace(ChainPath::parse(key), convert(value, what));
  return out;
}

std::string as_name(const json& j, const std::string& what) {
  if (!j.is_string()) invalid(what + " must name a block");
  return j.get<std::string>();
}

BlockStatus parse_status(const std::string& s) {
  if (s == "valid") return BlockStatus::valid;
  if (s == "invalid") return BlockStatus::invalid;
  if (s == "buffered") return BlockStatus::buffered;
  if (s == "unknown") return BlockStatus::unknown;
  invalid("unknown block status " + s);
}

std::string status_name(BlockStatus s) {
  switch (s) {
    case BlockStatus::valid: return "valid";
    case BlockStatus::invalid: return "invalid";
    case BlockStatus::buffered: return "buffered";
    case BlockStatus::unknown: return "unknown";
  }
  return "unknown";
}

Expectation parse_expectation(const json& j, const std::string& default_replica) {
  Expectation e;
  e.replica = j.value("replica", default_replica);
  if (j.contains("tips")) e.tips = per_chain<std::string>(j["tips"], "tips", as_name);
  if (j.contains("canonical")) e.canonical = per_chain<std::vector<std::string>>(j["canonical"], "canonical", name_list);
  if (j.contains("contains")) e.contains = per_chain<std::vector<std::string>>(j["contains"], "contains", name_list);
  if (j.contains("excludes")) e.excludes = per_chain<std::vector<std::string>>(j["excludes"], "excludes", name_list);
  if (j.contains("precedes")) {
    for (const auto& p : j["precedes"]) {
      e.precedes.push_back(PrecedesCheck{ChainPath::parse(p.at("chain").get<std::string>()),
                                         p.at("before").get<std::string>(), p.at("after").get<std::string>()});
    }
  }
  if (j.contains("owners")) {
    for (const auto& [chain, assets] : j["owners"].items()) {
      auto& dst = e.owners[ChainPath::parse(chain)];
      for (const auto& [asset, owner] : assets.items()) {
        const AssetId id = parse_uint(json(asset), "asset id");
        dst[id] = owner.is_null() ? std::nullopt : std::optional<AccountId>(parse_uint(owner, "owner"));
      }
    }
  }
  if (j.contains("status")) {
    for (const auto& [name, s] : j["status"].items()) e.status[name] = parse_status(s.get<std::string>());
  }
  return e;
}

ScenarioBlock parse_block(const json& j, const HierarchyConfig& h, const DifficultySchedule& schedule) {
  ScenarioBlock b;
  b.name = j.at("block").get<std::string>();
  if (b.name == "G") invalid("block name G is reserved for genesis");
  b.leaf = ChainPath::parse(j.at("slice").get<std::string>());
  if (!h.contains(b.leaf) || b.leaf.order() != h.num_orders) invalid(b.name + ": slice must name a leaf chain");
  if (j.contains("hash")) {
    b.achieved_order = order_from_hash(j["hash"].get<std::string>(), schedule);
    if (j.contains("order") && j["order"].get<int>() != b.achieved_order) {
      invalid(b.name + ": hash " + j["hash"].get<std::string>() + " classifies as order " +
              std::to_string(b.achieved_order));
    }
  } else {
    b.achieved_order = j.at("order").get<int>();
  }
  if (b.achieved_order < 1 || b.achieved_order > h.num_orders) invalid(b.name + ": order out of range");
  for (const auto& [k, v] : j.at("preds").items()) b.predecessors[std::stoi(k)] = v.get<std::string>();
  for (int k = b.achieved_order; k <= h.num_orders; ++k) {
    if (!b.predecessors.count(k)) invalid(b.name + ": missing predecessor at order " + std::to_string(k));
  }
  if (b.predecessors.size() != static_cast<std::size_t>(h.num_orders - b.achieved_order + 1)) {
    invalid(b.name + ": predecessors given for orders the block does not reach");
  }
  b.time = j.at("time").get<double>();
  for (const auto& t : j.value("txs", json::array())) {
    ScenarioTx tx;
    tx.id = parse_uint(t.at("id"), "tx id");
    tx.order = t.value("order", h.num_orders);
    if (tx.order < b.achieved_order || tx.order > h.num_orders) {
      invalid(b.name + ": transaction " + std::to_string(tx.id) + " placed in a body the block lacks");
    }
    tx.destination = t.contains("to") ? ChainPath::parse(t["to"].get<std::string>()) : b.leaf.prefix(tx.order);
    if (!h.contains(tx.destination)) invalid("transaction " + std::to_string(tx.id) + ": unknown destination");
    tx.asset = parse_uint(t.at("asset"), "asset");
    tx.sender = parse_uint(t.at("from"), "sender");
    tx.new_owner = parse_uint(t.at("owner"), "new owner");
    b.txs.push_back(tx);
  }
  return b;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::config_parse, std::string("scenario is not valid JSON: ") + e.what());
  }
  try {
    Scenario s;
    s.name = j.at("name").get<std::string>();
    s.description = j.value("description", "");
    s.hierarchy = parse_hierarchy(j.at("hierarchy"));
    s.schedule = parse_schedule(j.at("difficulty"));
    if (s.schedule.num_orders() != s.hierarchy.num_orders) invalid("difficulty needs one entry per order");
    const json assets_json = j.value("assets", json::object());
    for (const auto& [chain, assets] : assets_json.items()) {
      const ChainPath path = ChainPath::parse(chain);
      if (!s.hierarchy.contains(path)) invalid("assets allocated to unknown chain " + chain);
      for (const auto& [asset, owner] : assets.items()) {
        s.assets[path][parse_uint(json(asset), "asset id")] = parse_uint(owner, "owner");
      }
    }
    for (const auto& r : j.value("replicas", json::array({json{{"name", "observer"}}}))) {
      ScenarioReplica rep;
      rep.name = r.at("name").get<std::string>();
      if (r.contains("leaf")) {
        rep.leaf = ChainPath::parse(r["leaf"].get<std::string>());
        if (!s.hierarchy.contains(*rep.leaf) || rep.leaf->order() != s.hierarchy.num_orders) {
          invalid("replica " + rep.name + " must operate a leaf slice");
        }
      }
      s.replicas.push_back(rep);
    }
    if (s.replicas.empty()) invalid("scenario needs at least one replica");
    const std::string default_replica = s.replicas.front().name;
    std::set<std::string> defined{"G"};
    for (const auto& step : j.at("steps")) {
      if (step.contains("block")) {
        ScenarioBlock b = parse_block(step, s.hierarchy, s.schedule);
        for (const auto& [order, pred] : b.predecessors) {
          if (!defined.count(pred)) invalid(b.name + ": predecessor " + pred + " is not an earlier block");
        }
        if (!defined.insert(b.name).second) invalid("block name " + b.name + " used twice");
        s.steps.emplace_back(std::move(b));
      } else if (step.contains("checkpoint")) {
        Checkpoint c;
        c.label = step["checkpoint"].get<std::string>();
        if (step.contains("expect")) {
          const auto& ex = step["expect"];
          if (ex.is_array()) {
            for (const auto& e : ex) c.expectations.push_back(parse_expectation(e, default_replica));
          } else {
            c.expectations.push_back(parse_expectation(ex, default_replica));
          }
        }
        s.steps.emplace_back(std::move(c));
      } else {
        invalid("every step is either a block or a checkpoint");
      }
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::scenario_invalid, std::string("malformed scenario: ") + e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot read scenario file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::vector<std::string> builtin_scenarios() {
  std::vector<std::string> out;
  for (const auto& s : scenario_data::all) out.emplace_back(s.name);
  return out;
}

Scenario builtin_scenario(const std::string& name) {
  for (const auto& s : scenario_data::all) {
    if (name == s.name) return parse_scenario(std::string(s.text));
  }
  throw Error(ErrorKind::scenario_invalid, "no built-in scenario named " + name);
}

Scenario fig3_scenario() { return builtin_scenario("fig3"); }
Scenario coincident_reorg_scenario() { return builtin_scenario("coincident_reorg"); }

bool ScenarioReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::vector<CheckResult> ScenarioReport::failures() const {
  std::vector<CheckResult> out;
  std::copy_if(checks.begin(), checks.end(), std::back_inserter(out), [](const CheckResult& c) { return !c.passed; });
  return out;
}

namespace {

class Runner {
 public:
  explicit Runner(const Scenario& s) : s_(s), genesis_(make_genesis(s.hierarchy)),
        full_(BlockForest::full(s.hierarchy, s.schedule, genesis_)) {
    ids_["G"] = genesis_id;
    names_[genesis_id] = "G";
    for (const auto& r : s.replicas) {
      if (replicas_.count(r.name)) invalid("duplicate replica name " + r.name);
      std::vector<ChainPath> tracked =
          r.leaf ? mining_slice(*r.leaf, s.hierarchy) : s.hierarchy.all_chains();
      replicas_[r.name] = std::make_unique<Replica>(s.hierarchy, s.schedule, std::move(tracked), genesis_, s.assets);
    }
  }

  ScenarioReport run() {
    ScenarioReport report;
    report.name = s_.name;
    for (const auto& step : s_.steps) {
      if (const auto* b = std::get_if<ScenarioBlock>(&step)) {
        deliver(*b);
        ++report.blocks;
      } else {
        check(std::get<Checkpoint>(step), report);
      }
    }
    return report;
  }

 private:
  BlockId id_of(const std::string& name) const {
    auto it = ids_.find(name);
    if (it == ids_.end()) invalid("unknown block name " + name);
    return it->second;
  }

  std::string name_of(BlockId id) const {
    auto it = names_.find(id);
    return it == names_.end() ? std::to_string(id) : it->second;
  }

  void deliver(const ScenarioBlock& sb) {
    if (ids_.count(sb.name)) invalid("block " + sb.name + " defined twice");
    const BlockId id = ids_.size();
    ids_[sb.name] = id;
    names_[id] = sb.name;

    auto block = std::make_shared<Block>();
    block->id = id;
    block->leaf = sb.leaf;
    block->achieved_order = sb.achieved_order;
    block->found_time = sb.time;
    const int R = s_.hierarchy.num_orders;
    block->bodies.resize(static_cast<std::size_t>(R - sb.achieved_order + 1));
    for (int k = sb.achieved_order; k <= R; ++k) block->predecessors.push_back(id_of(sb.predecessors.at(k)));
    for (const auto& t : sb.txs) {
      Transaction tx;
      tx.id = t.id;
      tx.origin = sb.leaf.prefix(t.order);
      tx.destination = t.destination;
      tx.asset = t.asset;
      tx.sender = t.sender;
      tx.new_owner = t.new_owner;
      tx.injected_time = sb.time;
      block->bodies[static_cast<std::size_t>(t.order - sb.achieved_order)].push_back(tx);
    }
    // Exports follow from the ancestry; a block with an unusable predecessor
    // carries none and is judged by each replica on admission.
    const bool linked = std::all_of(block->predecessors.begin(), block->predecessors.end(),
                                    [&](BlockId p) { return full_.is_valid(p); });
    if (linked) {
      block->exports = compute_exports(full_, block->leaf, block->id, block->achieved_order, block->predecessors,
                                       block->bodies);
    }
    BlockPtr ptr = block;
    full_.admit(ptr, sb.time);
    for (auto& [name, replica] : replicas_) replica->receive(ptr, sb.time);
  }

  void record(ScenarioReport& report, const std::string& label, const std::string& replica, std::string assertion,
              bool ok, std::string detail) {
    report.checks.push_back(CheckResult{label, replica, std::move(assertion), ok, std::move(detail)});
  }

  std::string names(const std::vector<BlockId>& ids) const {
    std::string out = "[";
    for (std::size_t i = 0; i < ids.size(); ++i) out += (i ? "," : "") + name_of(ids[i]);
    return out + "]";
  }

  const std::vector<BlockId>* canonical_of(const Replica& r, const ChainPath& chain) const {
    auto idx = r.view().index_of(chain);
    return idx ? &r.view().lists[*idx] : nullptr;
  }

  bool precedes(const Replica& r, const PrecedesCheck& p) const {
    const BlockId before = id_of(p.before);
    const BlockId after = id_of(p.after);
    if (const auto* list = canonical_of(r, p.chain)) {
      auto ia = std::find(list->begin(), list->end(), before);
      auto ib = std::find(list->begin(), list->end(), after);
      return ia != list->end() && ib != list->end() && ia < ib;
    }
    // Chain not operated here: follow the stored predecessor references.
    const BlockForest& f = r.forest();
    if (!f.contains(after) || after == before) return false;
    BlockId cur = after;
    while (cur != genesis_id) {
      const Block& b = f.block(cur);
      if (!b.member_of(p.chain)) return false;
      cur = b.predecessor(p.chain.order());
      if (cur == before) return true;
      if (!f.contains(cur)) return false;
    }
    return false;
  }

  void check(const Checkpoint& c, ScenarioReport& report) {
    for (const auto& e : c.expectations) {
      auto it = replicas_.find(e.replica);
      if (it == replicas_.end()) invalid("checkpoint " + c.label + " names unknown replica " + e.replica);
      const Replica& r = *it->second;
      for (const auto& [chain, want] : e.tips) {
        const auto* list = canonical_of(r, chain);
        const std::string got = list ? name_of(list->back()) : "(untracked)";
        record(report, c.label, e.replica, "tip " + chain.to_string() + " = " + want, got == want, "got " + got);
      }
      for (const auto& [chain, want] : e.canonical) {
        const auto* list = canonical_of(r, chain);
        std::vector<std::string> got;
        if (list) {
          for (BlockId id : *list) got.push_back(name_of(id));
        }
        record(report, c.label, e.replica, "canonical " + chain.to_string(), list && got == want,
               list ? "got " + names(*list) : "chain not operated");
      }
      for (const auto& [chain, want] : e.contains) {
        const auto* list = canonical_of(r, chain);
        for (const auto& n : want) {
          const bool ok = list && std::find(list->begin(), list->end(), id_of(n)) != list->end();
          record(report, c.label, e.replica, chain.to_string() + " contains " + n, ok,
                 list ? "canonical " + names(*list) : "chain not operated");
        }
      }
      for (const auto& [chain, want] : e.excludes) {
        const auto* list = canonical_of(r, chain);
        for (const auto& n : want) {
          const bool ok = list && std::find(list->begin(), list->end(), id_of(n)) == list->end();
          record(report, c.label, e.replica, chain.to_string() + " excludes " + n, ok,
                 list ? "canonical " + names(*list) : "chain not operated");
        }
      }
      for (const auto& p : e.precedes) {
        record(report, c.label, e.replica, p.before + " precedes " + p.after + " in " + p.chain.to_string(),
               precedes(r, p), "");
      }
      for (const auto& [chain, assets] : e.owners) {
        auto idx = r.forest().tracked_index(chain);
        for (const auto& [asset, want] : assets) {
          std::optional<AccountId> got;
          if (idx) {
            const auto& owned = r.ledger().state(*idx).owned_assets;
            if (auto o = owned.find(asset); o != owned.end()) got = o->second;
          }
          auto show = [](const std::optional<AccountId>& a) { return a ? std::to_string(*a) : std::string("none"); };
          record(report, c.label, e.replica,
                 "owner of asset " + std::to_string(asset) + " in " + chain.to_string() + " = " + show(want),
                 idx && got == want, idx ? "got " + show(got) : "chain not operated");
        }
      }
      for (const auto& [name, want] : e.status) {
        const BlockStatus got = r.forest().status(id_of(name));
        record(report, c.label, e.replica, name + " is " + status_name(want), got == want,
               "got " + status_name(got));
      }
    }
  }

  const Scenario& s_;
  BlockPtr genesis_;
  BlockForest full_;
  std::map<std::string, std::unique_ptr<Replica>> replicas_;
  std::unordered_map<std::string, BlockId> ids_;
  std::unordered_map<BlockId, std::string> names_;
};

}  // namespace

ScenarioReport run_scenario(const Scenario& scenario) { return Runner(scenario).run(); }

}  // namespace blockreduce
