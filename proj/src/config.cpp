#include "blockreduce/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "blockreduce/error.hpp"

namespace blockreduce {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::config_invalid, msg); }

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) bad(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) bad("unknown key \"" + key + "\" in " + where);
  }
}

template <typename T>
T get(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where + "." + key + (j.contains(key) ? " has the wrong type" : " is required"));
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& where) {
  return j.contains(key) ? get<T>(j, key, where) : fallback;
}

}  // namespace

std::string to_string(ExperimentMode mode) {
  switch (mode) {
    case ExperimentMode::simulate: return "simulate";
    case ExperimentMode::analytic: return "analytic";
    case ExperimentMode::scenario: return "scenario";
    case ExperimentMode::scaling_sweep: return "scaling-sweep";
  }
  return "simulate";
}

ExperimentMode parse_mode(const std::string& text) {
  if (text == "simulate") return ExperimentMode::simulate;
  if (text == "analytic") return ExperimentMode::analytic;
  if (text == "scenario") return ExperimentMode::scenario;
  if (text == "scaling-sweep") return ExperimentMode::scaling_sweep;
  bad("unknown mode \"" + text + "\" (expected simulate, analytic, scenario or scaling-sweep)");
}

HierarchyConfig parse_hierarchy(const json& j) {
  only_keys(j, {"orders", "branching"}, "hierarchy");
  HierarchyConfig h;
  h.num_orders = get<int>(j, "orders", "hierarchy");
  h.branching = get_or<std::vector<std::uint32_t>>(j, "branching", {}, "hierarchy");
  try {
    h.validate();
  } catch (const Error& e) {
    bad(e.what());
  }
  return h;
}

DifficultySchedule parse_schedule(const json& j) {
  only_keys(j, {"bits", "thresholds"}, "difficulty");
  if (j.contains("bits") == j.contains("thresholds")) bad("difficulty needs exactly one of bits or thresholds");
  try {
    if (j.contains("bits")) return DifficultySchedule::from_leading_zero_bits(get<std::vector<int>>(j, "bits", "difficulty"));
    return DifficultySchedule(get<std::vector<double>>(j, "thresholds", "difficulty"));
  } catch (const Error& e) {
    bad(e.what());
  }
}

DelayModel parse_delay_model(const json& j) {
  only_keys(j, {"model", "mean", "sigma", "dimensions", "base", "scale"}, "delay");
  DelayModel m;
  try {
    m.kind = parse_delay_kind(get<std::string>(j, "model", "delay"));
  } catch (const Error& e) {
    bad(e.what());
  }
  m.mean = get_or<double>(j, "mean", m.mean, "delay");
  m.sigma = get_or<double>(j, "sigma", m.sigma, "delay");
  m.dimensions = get_or<int>(j, "dimensions", m.dimensions, "delay");
  m.base = get_or<double>(j, "base", m.base, "delay");
  m.scale = get_or<double>(j, "scale", m.scale, "delay");
  m.validate();
  return m;
}

SimConfig parse_sim_config(const json& j) {
  const std::string w = "simulation";
  only_keys(j, {"hierarchy", "difficulty", "network", "rates", "leaf_rate", "adversary", "workload", "duration",
                "check_consistency", "check_interval", "record_deliveries"},
            w);
  SimConfig c;
  c.hierarchy = parse_hierarchy(j.at("hierarchy"));
  if (!j.contains("difficulty")) bad("simulation.difficulty is required");
  c.schedule = parse_schedule(j.at("difficulty"));
  if (c.schedule.num_orders() != c.hierarchy.num_orders) bad("difficulty needs one entry per order");
  if (j.contains("network")) {
    const json& n = j["network"];
    only_keys(n, {"nodes", "degree", "delay", "policy"}, "network");
    c.network.nodes = get_or<std::size_t>(n, "nodes", c.network.nodes, "network");
    c.network.degree = get_or<int>(n, "degree", c.network.degree, "network");
    if (n.contains("delay")) c.network.delay = parse_delay_model(n["delay"]);
    if (n.contains("policy")) {
      try {
        c.network.policy = parse_partition_policy(get<std::string>(n, "policy", "network"));
      } catch (const Error& e) {
        bad(e.what());
      }
    }
  }
  if (j.contains("rates") == j.contains("leaf_rate")) bad("simulation needs exactly one of rates or leaf_rate");
  c.rates = j.contains("rates") ? get<std::vector<double>>(j, "rates", w)
                                : SimConfig::rates_from_schedule(c.schedule, get<double>(j, "leaf_rate", w));
  if (j.contains("adversary")) {
    const json& a = j["adversary"];
    only_keys(a, {"beta", "target", "strategy"}, "adversary");
    c.adversary.beta = get_or<double>(a, "beta", 0.0, "adversary");
    c.adversary.target = ChainPath::parse(get_or<std::string>(a, "target", "{1}", "adversary"));
    try {
      c.adversary.strategy = parse_adversary_strategy(get_or<std::string>(a, "strategy", "withhold", "adversary"));
    } catch (const Error& e) {
      bad(e.what());
    }
  }
  if (j.contains("workload")) {
    const json& wl = j["workload"];
    only_keys(wl, {"tx_rate", "same_chain_fraction", "assets_per_chain", "accounts", "visibility_delay",
                   "max_txs_per_body"},
              "workload");
    auto& x = c.workload;
    x.tx_rate = get_or<double>(wl, "tx_rate", x.tx_rate, "workload");
    x.same_chain_fraction = get_or<double>(wl, "same_chain_fraction", x.same_chain_fraction, "workload");
    x.assets_per_chain = get_or<std::size_t>(wl, "assets_per_chain", x.assets_per_chain, "workload");
    x.accounts = get_or<std::uint32_t>(wl, "accounts", x.accounts, "workload");
    x.visibility_delay = get_or<double>(wl, "visibility_delay", x.visibility_delay, "workload");
    x.max_txs_per_body = get_or<std::size_t>(wl, "max_txs_per_body", x.max_txs_per_body, "workload");
  }
  c.duration = get_or<double>(j, "duration", c.duration, w);
  c.check_consistency = get_or<bool>(j, "check_consistency", c.check_consistency, w);
  c.check_interval = get_or<double>(j, "check_interval", c.check_interval, w);
  c.record_deliveries = get_or<bool>(j, "record_deliveries", c.record_deliveries, w);
  c.validate();
  return c;
}

ModelParams parse_model_params(const json& j) {
  only_keys(j, {"d", "nodes", "delta", "delta_r", "lambda1", "beta", "q", "loads"}, "model");
  ModelParams p;
  p.d = get_or<int>(j, "d", p.d, "model");
  p.nodes = get_or<double>(j, "nodes", p.nodes, "model");
  p.delta = get_or<double>(j, "delta", p.delta, "model");
  if (j.contains("delta_r")) p.delta_r = get<double>(j, "delta_r", "model");
  p.lambda1 = get_or<double>(j, "lambda1", p.lambda1, "model");
  p.beta = get_or<double>(j, "beta", p.beta, "model");
  try {
    p.validate();
  } catch (const Error& e) {
    bad(e.what());
  }
  return p;
}

SweepSpec parse_sweep_spec(const json& j) {
  only_keys(j, {"q", "nodes", "degree", "delay", "policy", "root_load", "root_blocks", "calibration_sources"},
            "sweep");
  SweepSpec s;
  s.qs = get_or<std::vector<std::uint32_t>>(j, "q", s.qs, "sweep");
  s.nodes = get_or<std::size_t>(j, "nodes", s.nodes, "sweep");
  s.degree = get_or<int>(j, "degree", s.degree, "sweep");
  if (j.contains("delay")) s.delay = parse_delay_model(j["delay"]);
  if (j.contains("policy")) {
    try {
      s.policy = parse_partition_policy(get<std::string>(j, "policy", "sweep"));
    } catch (const Error& e) {
      bad(e.what());
    }
  }
  s.root_load = get_or<double>(j, "root_load", s.root_load, "sweep");
  s.root_blocks = get_or<double>(j, "root_blocks", s.root_blocks, "sweep");
  s.calibration_sources = get_or<std::size_t>(j, "calibration_sources", s.calibration_sources, "sweep");
  s.validate();
  return s;
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::config_parse, std::string("config is not valid JSON: ") + e.what());
  }
  only_keys(j, {"name", "mode", "output_dir", "seeds", "parallel", "trace", "simulation", "model", "scenario",
                "sweep"},
            "config");
  ExperimentConfig c;
  c.source = j;
  c.mode = parse_mode(get<std::string>(j, "mode", "config"));
  c.name = get_or<std::string>(j, "name", c.name, "config");
  c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir, "config");
  if (c.mode != ExperimentMode::analytic && c.mode != ExperimentMode::scenario && !j.contains("seeds")) {
    bad("seeds must be listed explicitly");
  }
  c.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", c.seeds, "config");
  if (c.seeds.empty()) bad("seed list is empty");
  c.parallel = get_or<int>(j, "parallel", c.parallel, "config");
  if (c.parallel < 1) bad("parallel must be at least 1");
  if (j.contains("trace")) {
    only_keys(j["trace"], {"enabled", "max_bytes"}, "trace");
    c.trace.enabled = get_or<bool>(j["trace"], "enabled", false, "trace");
    c.trace.max_bytes = get_or<std::uint64_t>(j["trace"], "max_bytes", c.trace.max_bytes, "trace");
  }

  const std::map<ExperimentMode, std::string> payload{{ExperimentMode::simulate, "simulation"},
                                                      {ExperimentMode::analytic, "model"},
                                                      {ExperimentMode::scenario, "scenario"},
                                                      {ExperimentMode::scaling_sweep, "sweep"}};
  for (const auto& [mode, key] : payload) {
    if (mode != c.mode && j.contains(key)) bad("mode " + to_string(c.mode) + " does not use \"" + key + "\"");
  }
  switch (c.mode) {
    case ExperimentMode::simulate:
      if (!j.contains("simulation")) bad("simulate mode needs a simulation section");
      c.simulation = parse_sim_config(j["simulation"]);
      c.simulation.seed = c.seeds.front();
      break;
    case ExperimentMode::analytic:
      c.model = parse_model_params(j.value("model", json::object()));
      if (j.contains("model")) {
        c.model_qs = get_or<std::vector<std::uint32_t>>(j["model"], "q", c.model_qs, "model");
        c.model_loads = get_or<std::vector<double>>(j["model"], "loads", c.model_loads, "model");
      }
      break;
    case ExperimentMode::scenario:
      c.scenario = get<std::string>(j, "scenario", "config");
      break;
    case ExperimentMode::scaling_sweep:
      c.sweep = parse_sweep_spec(j.value("sweep", json::object()));
      break;
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace blockreduce
