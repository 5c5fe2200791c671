#include <cmath>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "blockreduce/analytics.hpp"
#include "blockreduce/error.hpp"
#include "blockreduce/experiments.hpp"
#include "blockreduce/simulation.hpp"

namespace blockreduce {
namespace {

SimConfig hierarchical(std::uint64_t seed, double duration = 400.0) {
  SimConfig c;
  c.hierarchy = HierarchyConfig{3, {2, 2}};
  c.schedule = DifficultySchedule::from_leading_zero_bits({4, 2, 0});
  c.network.nodes = 24;
  c.network.degree = 4;
  c.network.delay = DelayModel::lognormal_delay(1.0, 0.5);
  c.rates = SimConfig::rates_from_schedule(c.schedule, 1.0);
  c.workload.tx_rate = 0.5;
  c.workload.assets_per_chain = 20;
  c.duration = duration;
  c.seed = seed;
  return c;
}

std::string trace_text(const TraceRecord& t) {
  std::ostringstream ss;
  write_trace_jsonl(t, ss);
  return ss.str();
}

TEST(SimConfig, RatesFollowTheSchedule) {
  const auto s = DifficultySchedule::from_leading_zero_bits({4, 2, 0});
  const auto rates = SimConfig::rates_from_schedule(s, 2.0);
  ASSERT_EQ(rates.size(), 3u);
  EXPECT_DOUBLE_EQ(rates[0], 2.0 / 16);
  EXPECT_DOUBLE_EQ(rates[1], 2.0 / 4);
  EXPECT_DOUBLE_EQ(rates[2], 2.0);
  auto c = hierarchical(1);
  c.rates[0] *= 2;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Run, BlockCountIsPoisson) {
  // One chain, λ = 1/600 over 60000 time units: 100 blocks expected.
  auto c = single_chain_config(2, 1.0 / 600, 1e-6, 100, 17);
  const auto t = run(c);
  EXPECT_NEAR(static_cast<double>(t.blocks.size()), 100.0, 3 * std::sqrt(100.0));
}

TEST(Run, NegligibleDelayMeansNoForks) {
  auto c = hierarchical(3, 200);
  c.network.delay = DelayModel::constant_delay(1e-9);
  c.workload.tx_rate = 0.0;
  const auto m = measure(run(c));
  for (const auto& chain : m.chains) {
    EXPECT_GT(chain.blocks_found, 0u) << chain.chain;
    EXPECT_DOUBLE_EQ(chain.efficiency, 1.0) << chain.chain;
  }
}

TEST(Run, SameSeedSameTrace) {
  const auto c = hierarchical(5, 200);
  const auto a = run(c);
  const auto b = run(c);
  EXPECT_EQ(trace_text(a), trace_text(b));
  EXPECT_EQ(a.final_view, b.final_view);
  auto other = c;
  other.seed = 6;
  EXPECT_NE(trace_text(run(other)), trace_text(a));
}

TEST(Run, ReplicasStayConsistent) {
  for (std::uint64_t seed : {11, 12, 13}) {
    const auto t = run(hierarchical(seed, 500));
    for (const char* kind : {"divergence", "conservation", "settlement", "invariant", "orphan"}) {
      EXPECT_EQ(t.issue_count(kind), 0u) << kind << " seed " << seed;
    }
    EXPECT_TRUE(t.drained);
    EXPECT_GT(t.consistency_checks, 0u);
    EXPECT_GT(t.state_comparisons, 0u);
    EXPECT_GE(t.replicas, 20u);
    const auto m = measure(t);
    EXPECT_GT(m.settlement.settled, 0u);
    EXPECT_LE(m.settlement.settled, m.settlement.committed_cross);
    EXPECT_LE(m.settlement.committed_cross, m.settlement.injected_cross);
  }
}

TEST(Run, SettlementAcrossBranchesWaitsForBothLinks) {
  const auto t = run(hierarchical(21, 500));
  ASSERT_FALSE(t.settlements.empty());
  std::map<BlockId, const BlockTrace*> blocks;
  for (const auto& b : t.blocks) blocks[b.id] = &b;
  for (const auto& [tx, links] : t.settlements) {
    const auto commit = t.commits.find(tx);
    ASSERT_NE(commit, t.commits.end());
    const double committed = blocks.at(commit->second)->found_time;
    const double link1 = blocks.at(links.first)->found_time;
    EXPECT_GE(link1, committed);
    if (links.second) EXPECT_GE(blocks.at(*links.second)->found_time, link1);
  }
}

TEST(RunAdversary, ZeroBetaIsAnOrdinaryRun) {
  const auto c = hierarchical(8, 150);
  EXPECT_EQ(trace_text(run_adversary(c)), trace_text(run(c)));
}

TEST(RunAdversary, OmittingACoincidentBlockNeverWins) {
  auto c = hierarchical(9, 400);
  c.workload.tx_rate = 0.0;
  c.adversary.beta = 0.45;
  c.adversary.target = ChainPath{1, 1, 1};
  c.adversary.strategy = AdversaryStrategy::omit_coincident;
  const auto t = run_adversary(c);
  std::size_t adversarial = 0;
  for (const auto& b : t.blocks) adversarial += b.adversarial;
  EXPECT_GT(adversarial, 10u);
  EXPECT_EQ(t.issue_count("adversary-canonical"), 0u);
  EXPECT_EQ(t.issue_count("divergence"), 0u);
}

TEST(RunAdversary, WithholdingLowersHonestEfficiency) {
  auto c = single_chain_config(50, 0.1, 1.0, 400, 4, 0.3);
  const auto m = measure(run_adversary(c));
  ASSERT_EQ(m.chains.size(), 1u);
  EXPECT_LT(m.chains[0].honest_efficiency, 0.85);
  EXPECT_GT(m.chains[0].honest_efficiency, 0.45);
}

TEST(TraceJsonl, WindowKeepsOnlyEventsInside) {
  const auto t = run(hierarchical(2, 100));
  std::ostringstream all, window;
  write_trace_jsonl(t, all);
  write_trace_jsonl(t, window, 20.0, 30.0);
  EXPECT_LT(window.str().size(), all.str().size());
  std::istringstream lines(window.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_GE(j.at("t").get<double>(), 20.0);
    EXPECT_LE(j.at("t").get<double>(), 30.0);
    ++n;
  }
  EXPECT_GT(n, 0u);
  // The full trace ends with a summary record.
  const std::string text = all.str();
  const auto last = text.substr(text.rfind('\n', text.size() - 2) + 1);
  EXPECT_EQ(nlohmann::json::parse(last).at("event"), "end");
}

}  // namespace
}  // namespace blockreduce
