#include "cli.hpp"

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "blockreduce/analytics.hpp"
#include "blockreduce/config.hpp"
#include "blockreduce/error.hpp"
#include "blockreduce/experiments.hpp"
#include "blockreduce/scenario.hpp"
#include "blockreduce/simulation.hpp"

#ifndef BLOCKREDUCE_VERSION
#define BLOCKREDUCE_VERSION "0.0.0"
#endif

namespace blockreduce::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Issue kinds that mean the protocol implementation broke an invariant, as
// opposed to expected outcomes such as an adversary winning a race.
const std::set<std::string> violation_kinds{"divergence", "conservation", "settlement", "invariant"};

// Events recorded before the first violation that go into its trace slice.
constexpr double violation_lookback = 50.0;

enum class Verbosity { quiet, normal, verbose };

struct Options {
  std::string config_path;
  std::string builtin_scenario;
  std::optional<std::string> output_dir;
  std::vector<std::uint64_t> seeds;
  std::optional<int> parallel;
  bool trace = false;
  std::optional<std::uint64_t> max_trace_bytes;
  bool no_consistency_check = false;
  Verbosity verbosity = Verbosity::normal;
};

class Run {
 public:
  Run(ExperimentConfig config, const Options& opts, std::ostream& out, std::ostream& err)
      : cfg_(std::move(config)), opts_(opts), out_(out), err_(err), dir_(cfg_.output_dir) {}

  int execute() {
    fs::create_directories(dir_);
    // A report from an earlier failed run in this directory no longer applies.
    fs::remove(dir_ / "error.json");
    int status = exit_ok;
    switch (cfg_.mode) {
      case ExperimentMode::simulate: status = simulate(); break;
      case ExperimentMode::analytic: status = analytic(); break;
      case ExperimentMode::scenario: status = scenario(); break;
      case ExperimentMode::scaling_sweep: status = sweep(); break;
    }
    write_manifest(status);
    return status;
  }

 private:
  void log(const std::string& line) const {
    if (opts_.verbosity == Verbosity::verbose) err_ << line << '\n';
  }

  void say(const std::string& text) const {
    if (opts_.verbosity != Verbosity::quiet) out_ << text;
  }

  void write_file(const std::string& name, const std::string& text) {
    const fs::path path = dir_ / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::io, "cannot write " + path.string());
    f << text;
    if (!f) throw Error(ErrorKind::io, "failed writing " + path.string());
    outputs_.push_back(name);
    log("wrote " + path.string());
  }

  // -- simulate --------------------------------------------------------------

  int simulate() {
    log("simulating " + std::to_string(cfg_.seeds.size()) + " seed(s)");
    const auto results = simulate_seeds(cfg_.simulation, cfg_.seeds, cfg_.parallel);
    write_file("metrics.csv", metrics_csv(results));

    json runs = json::array();
    bool violated = false;
    for (const auto& r : results) {
      json kinds = json::object();
      for (const auto& issue : r.trace.issues) kinds[issue.kind] = kinds.value(issue.kind, 0) + 1;
      json run{{"seed", r.seed},
               {"blocks", r.trace.blocks.size()},
               {"transactions", r.trace.txs.size()},
               {"cross_chain_injected", r.metrics.settlement.injected_cross},
               {"cross_chain_committed", r.metrics.settlement.committed_cross},
               {"cross_chain_settled", r.metrics.settlement.settled},
               {"replicas", r.trace.replicas},
               {"consistency_checks", r.trace.consistency_checks},
               {"state_comparisons", r.trace.state_comparisons},
               {"drained", r.trace.drained},
               {"issues", kinds},
               {"warnings", r.metrics.warnings}};
      runs.push_back(run);

      if (cfg_.trace.enabled) write_trace(r.trace);
      const IssueTrace* first = first_violation(r.trace);
      if (first) {
        violated = true;
        dump_violation(r.trace, *first);
      }
    }
    json summary{{"name", cfg_.name},
                 {"mode", to_string(cfg_.mode)},
                 {"consistency_checked", cfg_.simulation.check_consistency},
                 {"runs", runs},
                 {"invariant_violation", violated}};
    write_file("summary.json", summary.dump(2) + "\n");
    say("simulated " + std::to_string(results.size()) + " seed(s); metrics in " + (dir_ / "metrics.csv").string() +
        "\n");
    return violated ? exit_invariant_violation : exit_ok;
  }

  static const IssueTrace* first_violation(const TraceRecord& trace) {
    for (const auto& issue : trace.issues) {
      if (violation_kinds.count(issue.kind)) return &issue;
    }
    return nullptr;
  }

  void write_trace(const TraceRecord& trace) {
    std::ostringstream ss;
    write_trace_jsonl(trace, ss);
    const std::string text = ss.str();
    const std::string name = "trace-" + std::to_string(trace.seed) + ".jsonl";
    if (text.size() > cfg_.trace.max_bytes) {
      skipped_.push_back({{"file", name},
                          {"bytes", text.size()},
                          {"reason", "larger than max_trace_bytes (" + std::to_string(cfg_.trace.max_bytes) + ")"}});
      err_ << "warning: " << name << " not written: " << text.size() << " bytes exceeds the limit of "
           << cfg_.trace.max_bytes << "\n";
      return;
    }
    write_file(name, text);
  }

  void dump_violation(const TraceRecord& trace, const IssueTrace& issue) {
    std::ostringstream ss;
    write_trace_jsonl(trace, ss, issue.time - violation_lookback, issue.time);
    const std::string name = "violation-" + std::to_string(trace.seed) + ".jsonl";
    write_file(name, ss.str());
    err_ << json{{"error", to_string(ErrorKind::invariant_violation)},
                 {"seed", trace.seed},
                 {"kind", issue.kind},
                 {"time", issue.time},
                 {"detail", issue.detail},
                 {"trace_slice", (dir_ / name).string()}}
                .dump()
         << "\n";
  }

  // -- analytic --------------------------------------------------------------

  int analytic() {
    const ModelParams& m = cfg_.model;
    const double cd = c_d(m.d);
    const double bound = delay_bound(m.delta, m.d, m.nodes);

    std::ostringstream text;
    text << "C_d (d=" << m.d << ") = " << format_number(cd) << "\n";
    text << "delay bound (N=" << format_number(m.nodes) << ", delta=" << format_number(m.delta)
         << ") = " << format_number(bound) << "\n";
    text << "efficiency by load (lambda * Delta):\n";
    text << std::setw(10) << "load" << std::setw(22) << "E" << std::setw(22) << "E(beta=" + format_number(m.beta) + ")"
         << "\n";

    std::ostringstream csv;
    csv << "load,lambda,delay_bound,efficiency,efficiency_adversary,effective_rate,beta\n";
    for (double load : cfg_.model_loads) {
      const double lambda = load / bound;
      const double e = efficiency(lambda, bound);
      const double eb = efficiency(lambda, bound, m.beta);
      text << std::setw(10) << format_number(load) << std::setw(22) << format_number(e) << std::setw(22)
           << format_number(eb) << "\n";
      csv << format_number(load) << ',' << format_number(lambda) << ',' << format_number(bound) << ','
          << format_number(e) << ',' << format_number(eb) << ',' << format_number(effective_rate(lambda, bound, m.beta))
          << ',' << format_number(m.beta) << "\n";
    }
    write_file("analytic.csv", csv.str());

    const auto curve = scaling_curve(m, cfg_.model_qs);
    std::ostringstream scaling;
    scaling << "q,delay_root,delay_sub,lambda_r,lambda_star,aggregate,superlinearity\n";
    text << "scaling over q order-2 chains (lambda_1 = " << format_number(m.lambda1) << "):\n";
    text << std::setw(6) << "q" << std::setw(22) << "Delta_r" << std::setw(22) << "aggregate" << std::setw(22)
         << "ratio" << "\n";
    for (const auto& p : curve) {
      scaling << p.q << ',' << format_number(p.delay_root) << ',' << format_number(p.delay_sub) << ','
              << format_number(p.lambda_r) << ',' << format_number(p.lambda_star) << ',' << format_number(p.aggregate)
              << ',' << format_number(p.superlinearity) << "\n";
      text << std::setw(6) << p.q << std::setw(22) << format_number(p.delay_sub) << std::setw(22)
           << format_number(p.aggregate) << std::setw(22) << format_number(p.superlinearity) << "\n";
    }
    write_file("scaling.csv", scaling.str());

    json summary{{"name", cfg_.name},
                 {"mode", to_string(cfg_.mode)},
                 {"c_d", cd},
                 {"delay_bound", bound},
                 {"d", m.d},
                 {"nodes", m.nodes},
                 {"delta", m.delta}};
    write_file("summary.json", summary.dump(2) + "\n");
    say(text.str());
    return exit_ok;
  }

  // -- scenario --------------------------------------------------------------

  int scenario() {
    const auto builtins = builtin_scenarios();
    const bool builtin = std::find(builtins.begin(), builtins.end(), cfg_.scenario) != builtins.end();
    if (!builtin && !fs::exists(cfg_.scenario)) {
      std::string names;
      for (const auto& n : builtins) names += (names.empty() ? "" : ", ") + n;
      throw Error(ErrorKind::scenario_invalid,
                  "no built-in scenario or file named \"" + cfg_.scenario + "\" (built-ins: " + names + ")");
    }
    const Scenario sc = builtin ? builtin_scenario(cfg_.scenario) : load_scenario(cfg_.scenario);
    log("running scenario " + sc.name);
    const ScenarioReport report = run_scenario(sc);

    std::ostringstream csv;
    csv << "checkpoint,replica,assertion,passed,detail\n";
    for (const auto& c : report.checks) {
      csv << quote(c.checkpoint) << ',' << quote(c.replica) << ',' << quote(c.assertion) << ','
          << (c.passed ? "true" : "false") << ',' << quote(c.detail) << "\n";
    }
    write_file("checks.csv", csv.str());

    json failures = json::array();
    for (const auto& f : report.failures()) {
      failures.push_back({{"checkpoint", f.checkpoint},
                          {"replica", f.replica},
                          {"assertion", f.assertion},
                          {"detail", f.detail}});
    }
    json summary{{"name", cfg_.name},
                 {"mode", to_string(cfg_.mode)},
                 {"scenario", report.name},
                 {"blocks", report.blocks},
                 {"checks", report.checks.size()},
                 {"passed", report.passed()},
                 {"failures", failures}};
    write_file("summary.json", summary.dump(2) + "\n");
    say("scenario " + report.name + ": " + std::to_string(report.checks.size() - failures.size()) + "/" +
        std::to_string(report.checks.size()) + " checks passed\n");
    if (!report.passed()) {
      err_ << json{{"error", to_string(ErrorKind::invariant_violation)},
                   {"scenario", report.name},
                   {"failures", failures}}
                  .dump()
           << "\n";
      return exit_invariant_violation;
    }
    return exit_ok;
  }

  static std::string quote(const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  }

  // -- scaling sweep ---------------------------------------------------------

  int sweep() {
    log("scaling sweep over " + std::to_string(cfg_.sweep.qs.size()) + " values of q, " +
        std::to_string(cfg_.seeds.size()) + " seed(s)");
    const SweepResult result = run_scaling_sweep(cfg_.sweep, cfg_.seeds, cfg_.parallel);
    write_file("sweep.csv", sweep_csv(result));

    json points = json::array();
    std::ostringstream text;
    text << std::setw(6) << "q" << std::setw(22) << "aggregate" << std::setw(22) << "stderr" << std::setw(22)
         << "ratio" << "\n";
    for (const auto& p : result.points) {
      points.push_back(
          {{"q", p.q}, {"aggregate_mean", p.aggregate_mean}, {"aggregate_stderr", p.aggregate_stderr}, {"ratio", p.ratio}});
      text << std::setw(6) << p.q << std::setw(22) << format_number(p.aggregate_mean) << std::setw(22)
           << format_number(p.aggregate_stderr) << std::setw(22) << format_number(p.ratio) << "\n";
    }
    json summary{{"name", cfg_.name},
                 {"mode", to_string(cfg_.mode)},
                 {"seeds", cfg_.seeds.size()},
                 {"points", points},
                 {"superlinear", result.superlinear()},
                 {"nondecreasing", result.nondecreasing()}};
    write_file("summary.json", summary.dump(2) + "\n");
    say(text.str());
    return exit_ok;
  }

  // -- manifest --------------------------------------------------------------

  void write_manifest(int status) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    std::ostringstream stamp;
    stamp << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");

    json manifest{{"name", cfg_.name},
                  {"mode", to_string(cfg_.mode)},
                  {"config_hash", "fnv1a64:" + fnv1a_hex(cfg_.source.dump())},
                  {"seeds", cfg_.seeds},
                  {"parallel", cfg_.parallel},
                  {"version", BLOCKREDUCE_VERSION},
                  {"compiler", compiler()},
                  {"created_utc", stamp.str()},
                  {"exit_status", status},
                  {"outputs", outputs_}};
    if (cfg_.mode == ExperimentMode::simulate) manifest["consistency_checked"] = cfg_.simulation.check_consistency;
    if (!skipped_.empty()) manifest["skipped_outputs"] = skipped_;
    outputs_.push_back("manifest.json");
    const fs::path path = dir_ / "manifest.json";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::io, "cannot write " + path.string());
    f << manifest.dump(2) << "\n";
  }

  static std::string compiler() {
#if defined(__clang__)
    return "clang " __clang_version__;
#elif defined(__GNUC__)
    return "gcc " __VERSION__;
#else
    return "unknown";
#endif
  }

  ExperimentConfig cfg_;
  const Options& opts_;
  std::ostream& out_;
  std::ostream& err_;
  fs::path dir_;
  std::vector<std::string> outputs_;
  json skipped_ = json::array();
};

int exit_status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config_invalid:
    case ErrorKind::config_parse:
    case ErrorKind::scenario_invalid:
    case ErrorKind::io:
      return exit_bad_input;
    case ErrorKind::invariant_violation:
      return exit_invariant_violation;
    default:
      return exit_failure;
  }
}

void report_error(const std::string& kind, const std::string& message, const std::optional<fs::path>& dir,
                  std::ostream& err) {
  const json report{{"error", kind}, {"message", message}};
  err << report.dump() << "\n";
  if (!dir) return;
  std::error_code ec;
  fs::create_directories(*dir, ec);
  if (ec) return;
  std::ofstream f(*dir / "error.json", std::ios::binary);
  if (f) f << report.dump(2) << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opts;
  bool verbose = false;
  bool quiet = false;
  bool list = false;

  CLI::App app{"Run BlockReduce experiments: hierarchical chains, simulations and analytic models.", "blockreduce"};
  app.add_option("config", opts.config_path, "Experiment config file (JSON)");
  app.add_option("--scenario", opts.builtin_scenario, "Run a built-in scenario or scenario file without a config");
  app.add_flag("--list-scenarios", list, "Print the built-in scenario names and exit");
  app.add_option("-o,--output", opts.output_dir, "Output directory (overrides output_dir in the config)");
  app.add_option("-s,--seed", opts.seeds, "Seed to run; repeat to run several (replaces the config's seed list)");
  app.add_option("-j,--parallel", opts.parallel, "Number of trials to run concurrently")->check(CLI::PositiveNumber);
  app.add_flag("--trace", opts.trace, "Write a line-delimited JSON trace per simulate seed");
  app.add_option("--max-trace-bytes", opts.max_trace_bytes, "Skip traces larger than this many bytes");
  app.add_flag("--no-consistency-check", opts.no_consistency_check,
               "Disable replica consistency and conservation checks in simulate mode");
  app.add_flag("-v,--verbose", verbose, "Print progress to stderr");
  app.add_flag("-q,--quiet", quiet, "Print nothing on success");
  app.add_flag_callback("--version", [&] { throw CLI::Success(); });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success&) {
    if (std::find(args.begin(), args.end(), "--version") != args.end()) {
      out << "blockreduce " << BLOCKREDUCE_VERSION << "\n";
      return exit_ok;
    }
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what(), std::nullopt, err);
    return exit_bad_input;
  }
  if (verbose && quiet) {
    report_error("usage", "--verbose and --quiet are mutually exclusive", std::nullopt, err);
    return exit_bad_input;
  }
  opts.verbosity = verbose ? Verbosity::verbose : quiet ? Verbosity::quiet : Verbosity::normal;

  if (list) {
    for (const auto& name : builtin_scenarios()) out << name << "\n";
    return exit_ok;
  }
  if (opts.config_path.empty() == opts.builtin_scenario.empty()) {
    report_error("usage", "give either a config file or --scenario NAME", std::nullopt, err);
    return exit_bad_input;
  }

  std::optional<fs::path> error_dir = opts.output_dir ? std::optional<fs::path>(*opts.output_dir) : std::nullopt;
  try {
    ExperimentConfig cfg;
    if (!opts.config_path.empty()) {
      cfg = load_experiment_config(opts.config_path);
    } else {
      cfg = parse_experiment_config(json{{"mode", "scenario"}, {"name", opts.builtin_scenario},
                                         {"scenario", opts.builtin_scenario}}
                                        .dump());
    }
    if (opts.output_dir) cfg.output_dir = *opts.output_dir;
    error_dir = cfg.output_dir;
    if (!opts.seeds.empty()) {
      cfg.seeds = opts.seeds;
      cfg.simulation.seed = cfg.seeds.front();
    }
    if (opts.parallel) cfg.parallel = *opts.parallel;
    if (opts.trace) cfg.trace.enabled = true;
    if (opts.max_trace_bytes) cfg.trace.max_bytes = *opts.max_trace_bytes;
    if (opts.no_consistency_check) cfg.simulation.check_consistency = false;

    Run run(std::move(cfg), opts, out, err);
    return run.execute();
  } catch (const Error& e) {
    report_error(std::string(to_string(e.kind())), e.what(), error_dir, err);
    return exit_status_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    report_error(std::string(to_string(ErrorKind::io)), e.what(), std::nullopt, err);
    return exit_bad_input;
  } catch (const std::exception& e) {
    report_error("internal", e.what(), error_dir, err);
    return exit_failure;
  }
}

}  // namespace blockreduce::cli
