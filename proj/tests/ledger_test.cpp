#include <gtest/gtest.h>

#include "blockreduce/error.hpp"
#include "blockreduce/ledger.hpp"
#include "blockreduce/replica.hpp"
#include "test_support.hpp"

namespace blockreduce {
namespace {

using testing::BlockBuilder;

const ChainPath root{1};
const ChainPath c1{1, 1};
const ChainPath c2{1, 2};

Transaction transfer(TxId id, ChainPath from, ChainPath to, AssetId asset, AccountId sender, AccountId owner) {
  Transaction tx;
  tx.id = id;
  tx.origin = std::move(from);
  tx.destination = std::move(to);
  tx.asset = asset;
  tx.sender = sender;
  tx.new_owner = owner;
  return tx;
}

TEST(ValidateTransaction, ChecksOwnershipAndResidence) {
  PartitionState s;
  s.chain = c1;
  s.owned_assets = {{1, 10}};
  s.in_flight = {{2, OutboundTransfer{5, c2}}};
  s.applied_txs = {5};
  EXPECT_EQ(validate_transaction(transfer(7, c1, c1, 1, 10, 11), s, 10), TxCheck::valid);
  EXPECT_EQ(validate_transaction(transfer(7, c1, c1, 1, 12, 11), s, 12), TxCheck::wrong_owner);
  EXPECT_EQ(validate_transaction(transfer(7, c1, c1, 3, 10, 11), s, 10), TxCheck::asset_absent);
  EXPECT_EQ(validate_transaction(transfer(7, c1, c2, 2, 10, 11), s, 10), TxCheck::asset_in_flight);
  EXPECT_EQ(validate_transaction(transfer(5, c1, c1, 1, 10, 11), s, 10), TxCheck::replayed);
}

TEST(SettlementCondition, CrossBranchNeedsTwoLinks) {
  const auto c = settlement_condition_for(transfer(1, ChainPath{1, 1, 1}, ChainPath{1, 2, 2}, 1, 1, 2));
  EXPECT_EQ(c.ancestor, root);
  EXPECT_EQ(c.link1_from, (ChainPath{1, 1, 1}));
  EXPECT_FALSE(c.link1_trivial);
  ASSERT_TRUE(c.link2_from);
  EXPECT_EQ(*c.link2_from, (ChainPath{1, 2, 2}));
}

TEST(SettlementCondition, DestinationIsTheAncestor) {
  const auto c = settlement_condition_for(transfer(1, ChainPath{1, 1, 1}, root, 1, 1, 2));
  EXPECT_EQ(c.ancestor, root);
  EXPECT_FALSE(c.link1_trivial);
  EXPECT_FALSE(c.link2_from);
}

TEST(SettlementCondition, OriginIsTheAncestor) {
  const auto c = settlement_condition_for(transfer(1, c1, ChainPath{1, 1, 2}, 1, 1, 2));
  EXPECT_EQ(c.ancestor, c1);
  EXPECT_TRUE(c.link1_trivial);
  ASSERT_TRUE(c.link2_from);
  EXPECT_EQ(*c.link2_from, (ChainPath{1, 1, 2}));
}

TEST(SettlementCondition, SameChainTransferHasNone) {
  try {
    settlement_condition_for(transfer(1, c1, c1, 1, 1, 2));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::same_origin_destination);
  }
}

TEST(StateConsistency, ReportsTheFirstDifference) {
  PartitionState a;
  a.chain = c1;
  a.owned_assets = {{1, 10}, {2, 20}};
  PartitionState b = a;
  EXPECT_FALSE(check_state_consistency(a, b));
  b.owned_assets[2] = 21;
  const auto d = check_state_consistency(a, b);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->chain, c1);
  b = a;
  b.applied_txs.insert(9);
  EXPECT_TRUE(check_state_consistency(a, b));
  b = a;
  b.in_flight[3] = OutboundTransfer{4, c2};
  EXPECT_TRUE(check_state_consistency(a, b));
  // Pending inbound entries are written by other chains and are not compared.
  b = a;
  b.pending_inbound[4] = PendingEntry{};
  EXPECT_FALSE(check_state_consistency(a, b));
}

// Two order-2 chains under the root; asset 1 starts in {1,1} owned by 10.
class LedgerTest : public ::testing::Test {
 protected:
  LedgerTest() { replica = Replica::observer(b.hierarchy(), b.schedule(), b.genesis(), allocation); }

  void deliver(const BlockPtr& block) {
    const auto r = replica->receive(block, block->found_time);
    ASSERT_TRUE(r.failures.empty()) << r.failures.front().reason;
  }
  const PartitionState& state(const ChainPath& c) const { return replica->ledger().state(c); }
  std::optional<AccountId> owner(const ChainPath& c, AssetId a) const {
    auto it = state(c).owned_assets.find(a);
    return it == state(c).owned_assets.end() ? std::nullopt : std::optional<AccountId>(it->second);
  }
  void expect_conserved() const {
    EXPECT_FALSE(check_conservation(replica->forest(), replica->ledger()));
    EXPECT_FALSE(check_settlement_safety(replica->forest(), replica->ledger(), replica->tracker()));
  }

  BlockBuilder b{HierarchyConfig{2, {2}}, DifficultySchedule::from_leading_zero_bits({3, 0})};
  AssetAllocation allocation{{c1, {{1, 10}}}, {c2, {{2, 20}}}};
  std::unique_ptr<Replica> replica;
};

TEST_F(LedgerTest, SameChainTransferUpdatesOwnerImmediately) {
  deliver(b.make(c1, 2, {}, 1.0, {{transfer(1, c1, c1, 1, 10, 11)}}));
  EXPECT_EQ(owner(c1, 1), 11u);
  EXPECT_TRUE(state(c1).applied_txs.count(1));
  expect_conserved();
}

TEST_F(LedgerTest, BlockWithInvalidTransactionIsMarkedInvalid) {
  auto bad = b.make(c1, 2, {}, 1.0, {{transfer(1, c1, c1, 1, 99, 11)}});
  const auto r = replica->receive(bad, 1.0);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(replica->forest().status(bad->id), BlockStatus::invalid);
  EXPECT_EQ(replica->view().tip(c1), genesis_id);
  EXPECT_EQ(owner(c1, 1), 10u);
}

TEST_F(LedgerTest, DoubleSpendInOneBodyIsRejected) {
  auto bad = b.make(c1, 2, {}, 1.0, {{transfer(1, c1, c2, 1, 10, 11), transfer(2, c1, c2, 1, 10, 12)}});
  const auto r = replica->receive(bad, 1.0);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_NE(r.failures.front().reason.find("asset-in-flight"), std::string::npos) << r.failures.front().reason;
  EXPECT_EQ(owner(c1, 1), 10u);
}

TEST_F(LedgerTest, CrossChainTransferSettlesOnlyAfterBothCoincidentLinks) {
  auto commit = b.make(c1, 2, {}, 1.0, {{transfer(1, c1, c2, 1, 10, 21)}});
  deliver(commit);
  // Debited at the origin, not yet credited anywhere.
  EXPECT_FALSE(owner(c1, 1));
  EXPECT_FALSE(owner(c2, 1));
  EXPECT_TRUE(state(c1).in_flight.count(1));
  expect_conserved();

  // Link 1: a coincident block of {1,1} and the root after the commit.
  auto link1 = b.make(c1, 1, {{1, genesis_id}, {2, commit->id}}, 2.0);
  ASSERT_EQ(link1->exports.size(), 1u);
  deliver(link1);
  EXPECT_FALSE(owner(c2, 1));
  EXPECT_TRUE(state(c2).pending_inbound.count(1));
  expect_conserved();

  // A {1,2}-only block does not complete link 2.
  auto plain = b.make(c2, 2, {}, 3.0);
  deliver(plain);
  EXPECT_FALSE(owner(c2, 1));

  // Link 2: a coincident block of {1,2} and the root after link 1.
  auto link2 = b.make(c2, 1, {{1, link1->id}, {2, plain->id}}, 4.0);
  deliver(link2);
  EXPECT_EQ(owner(c2, 1), 21u);
  EXPECT_FALSE(state(c2).pending_inbound.count(1));
  ASSERT_TRUE(state(c2).credits.count(1));
  EXPECT_EQ(state(c2).credits.at(1).link1, link1->id);
  EXPECT_EQ(state(c2).credits.at(1).link2, link2->id);
  expect_conserved();
}

TEST_F(LedgerTest, ReorgOfUnsettledCommitRestoresTheAsset) {
  auto commit = b.make(c1, 2, {}, 1.0, {{transfer(1, c1, c2, 1, 10, 21)}});
  deliver(commit);
  EXPECT_FALSE(owner(c1, 1));
  // A longer {1,1} fork without the commit.
  auto f1 = b.make(c1, 2, {}, 2.0);
  auto f2 = b.make(c1, 2, {{2, f1->id}}, 3.0);
  deliver(f1);
  deliver(f2);
  EXPECT_EQ(replica->view().tip(c1), f2->id);
  EXPECT_EQ(owner(c1, 1), 10u);
  EXPECT_FALSE(state(c1).in_flight.count(1));
  EXPECT_FALSE(state(c1).applied_txs.count(1));
  expect_conserved();
}

TEST_F(LedgerTest, RootReorgReversesSettledCredits) {
  auto commit = b.make(c1, 2, {}, 1.0, {{transfer(1, c1, c2, 1, 10, 21)}});
  auto link1 = b.make(c1, 1, {{1, genesis_id}, {2, commit->id}}, 2.0);
  auto link2 = b.make(c2, 1, {{1, link1->id}, {2, genesis_id}}, 3.0);
  for (const auto& x : {commit, link1, link2}) deliver(x);
  const auto settled = replica->ledger().states();
  EXPECT_EQ(owner(c2, 1), 21u);

  // A heavier root fork of order-1 blocks on {1,2} that excludes link1.
  auto r1 = b.make(c2, 1, {}, 4.0);
  auto r2 = b.make(c2, 1, {{1, r1->id}, {2, r1->id}}, 5.0);
  auto r3 = b.make(c2, 1, {{1, r2->id}, {2, r2->id}}, 6.0);
  for (const auto& x : {r1, r2, r3}) deliver(x);
  EXPECT_EQ(replica->view().tip(root), r3->id);
  EXPECT_FALSE(owner(c2, 1));
  EXPECT_FALSE(state(c2).credits.count(1));
  // The commit itself stays canonical in {1,1}: the asset is in flight again.
  EXPECT_FALSE(owner(c1, 1));
  EXPECT_TRUE(state(c1).in_flight.count(1));
  expect_conserved();
  (void)settled;
}

TEST_F(LedgerTest, RevertThenReapplyIsIdentity) {
  auto commit = b.make(c1, 2, {}, 1.0, {{transfer(1, c1, c2, 1, 10, 21)}});
  auto link1 = b.make(c1, 1, {{1, genesis_id}, {2, commit->id}}, 2.0);
  auto link2 = b.make(c2, 1, {{1, link1->id}, {2, genesis_id}}, 3.0);
  for (const auto& x : {commit, link1, link2}) deliver(x);

  Ledger ledger(replica->forest(), allocation);
  const auto& forest = replica->forest();
  const std::vector<std::pair<ChainPath, BlockId>> order{
      {root, link1->id}, {c1, commit->id}, {c1, link1->id}, {root, link2->id}, {c2, link2->id}};
  for (const auto& [chain, id] : order) ASSERT_FALSE(ledger.apply_block(*forest.tracked_index(chain), id));
  EXPECT_EQ(ledger.states(), replica->ledger().states());

  const auto before = ledger.states();
  const auto c2_idx = *forest.tracked_index(c2);
  ledger.revert_block(c2_idx, link2->id);
  EXPECT_NE(ledger.states(), before);
  ASSERT_FALSE(ledger.apply_block(c2_idx, link2->id));
  EXPECT_EQ(ledger.states(), before);
}

TEST(LedgerSettlement, CreditsFromSeveralOriginsShareOneRelayBlock) {
  // Transfers into the root from a leaf chain and from an order-2 chain,
  // both relayed by the same coincident root block.
  BlockBuilder b(HierarchyConfig{3, {1, 1}}, DifficultySchedule::from_leading_zero_bits({4, 2, 0}));
  const ChainPath leaf{1, 1, 1};
  const AssetAllocation alloc{{leaf, {{1, 1}}}, {c1, {{2, 2}}}};
  auto replica = Replica::observer(b.hierarchy(), b.schedule(), b.genesis(), alloc);
  auto t3 = b.make(leaf, 3, {}, 1.0, {{transfer(1, leaf, root, 1, 1, 5)}});
  auto t2 = b.make(leaf, 2, {{2, genesis_id}, {3, t3->id}}, 2.0, {{transfer(2, c1, root, 2, 2, 6)}, {}});
  auto carrier = b.make(leaf, 1, {{1, genesis_id}, {2, t2->id}, {3, t2->id}}, 3.0);
  for (const auto& x : {t3, t2, carrier}) {
    const auto r = replica->receive(x, x->found_time);
    ASSERT_TRUE(r.failures.empty()) << r.failures.front().reason;
  }
  ASSERT_EQ(carrier->exports.size(), 2u);
  const auto& s = replica->ledger().state(root);
  EXPECT_EQ(s.owned_assets.at(1), 5u);
  EXPECT_EQ(s.owned_assets.at(2), 6u);
  EXPECT_EQ(s.credits.at(1).link1, carrier->id);
  EXPECT_EQ(s.credits.at(2).link1, carrier->id);
  EXPECT_FALSE(check_conservation(replica->forest(), replica->ledger()));
}

}  // namespace
}  // namespace blockreduce
