#include <gtest/gtest.h>

#include "blockreduce/error.hpp"
#include "blockreduce/forest.hpp"
#include "test_support.hpp"

namespace blockreduce {
namespace {

using testing::BlockBuilder;

const ChainPath root{1};
const ChainPath c11{1, 1};
const ChainPath c12{1, 2};
const ChainPath c111{1, 1, 1};
const ChainPath c112{1, 1, 2};
const ChainPath c121{1, 2, 1};

class ForestTest : public ::testing::Test {
 protected:
  BlockBuilder build{HierarchyConfig{3, {2, 2}}, DifficultySchedule::from_leading_zero_bits({4, 2, 0})};
  BlockForest forest = BlockForest::full(build.hierarchy(), build.schedule(), build.genesis());
};

TEST_F(ForestTest, GenesisChildIsAdmitted) {
  auto b = build.make(c111, 3, {}, 1.0);
  const auto out = forest.admit(b, 1.0);
  EXPECT_EQ(out.result, AdmissionResult::admitted);
  EXPECT_EQ(out.admitted, std::vector<BlockId>{b->id});
  EXPECT_TRUE(forest.is_valid(b->id));
  const auto idx = *forest.tracked_index(c111);
  EXPECT_TRUE(forest.is_member(b->id, idx));
  EXPECT_EQ(forest.height(b->id, idx), 1u);
  EXPECT_FALSE(forest.is_member(b->id, *forest.tracked_index(c11)));
}

TEST_F(ForestTest, UnknownPredecessorIsBufferedUntilItArrives) {
  auto a = build.make(c111, 3, {}, 1.0);
  auto b = build.make(c111, 3, {{3, a->id}}, 2.0);
  auto c = build.make(c111, 3, {{3, b->id}}, 3.0);

  auto out = forest.admit(c, 3.0);
  EXPECT_EQ(out.result, AdmissionResult::buffered);
  EXPECT_EQ(forest.status(c->id), BlockStatus::buffered);
  out = forest.admit(b, 3.5);
  EXPECT_EQ(out.result, AdmissionResult::buffered);
  EXPECT_EQ(forest.buffered_count(), 2u);

  out = forest.admit(a, 4.0);
  EXPECT_EQ(out.result, AdmissionResult::admitted);
  EXPECT_EQ(out.admitted, (std::vector<BlockId>{a->id, b->id, c->id}));
  EXPECT_EQ(forest.buffered_count(), 0u);
  EXPECT_EQ(forest.height(c->id, *forest.tracked_index(c111)), 3u);
}

TEST_F(ForestTest, DuplicatesAreReported) {
  auto a = build.make(c111, 3, {}, 1.0);
  forest.admit(a, 1.0);
  EXPECT_EQ(forest.admit(a, 2.0).result, AdmissionResult::duplicate);
}

TEST_F(ForestTest, CoincidentBlockOnInvalidLeafPredecessorIsRejected) {
  auto bad = build.make(c111, 3, {}, 1.0);
  forest.admit(bad, 1.0);
  forest.mark_invalid(bad->id, "test");
  // Order-2 predecessor (genesis) is valid, order-3 predecessor is not.
  auto coincident = build.make(c111, 2, {{2, genesis_id}, {3, bad->id}}, 2.0);
  const auto out = forest.admit(coincident, 2.0);
  EXPECT_EQ(out.result, AdmissionResult::rejected);
  EXPECT_EQ(forest.status(coincident->id), BlockStatus::invalid);
  EXPECT_NE(forest.record(coincident->id).reason.find("invalid"), std::string::npos);
}

TEST_F(ForestTest, BufferedDescendantsOfARejectedBlockAreRejected) {
  auto a = build.make(c111, 3, {}, 1.0);
  auto b = build.make(c111, 3, {{3, a->id}}, 2.0);
  forest.admit(b, 2.0);
  forest.admit(a, 2.5);
  forest.mark_invalid(a->id, "test");
  EXPECT_EQ(forest.status(b->id), BlockStatus::invalid);
}

TEST_F(ForestTest, PredecessorMustBelongToTheChain) {
  auto other = build.make(c112, 3, {}, 1.0);
  forest.admit(other, 1.0);
  auto wrong = std::make_shared<Block>(*build.make(c111, 3, {}, 2.0));
  wrong->predecessors = {other->id};
  EXPECT_EQ(forest.admit(wrong, 2.0).result, AdmissionResult::rejected);
}

TEST_F(ForestTest, BrokenCoincidentLinkageIsRejected) {
  // X is an order-2 block shared by {1,1} and {1,1,1}.
  auto x = build.make(c111, 2, {}, 1.0);
  forest.admit(x, 1.0);
  // A block that extends X in {1,1} but skips it in {1,1,1}.
  auto skip = build.make(c111, 2, {{2, x->id}, {3, genesis_id}}, 2.0);
  const auto out = forest.admit(skip, 2.0);
  EXPECT_EQ(out.result, AdmissionResult::rejected);
  EXPECT_NE(forest.record(skip->id).reason.find("linkage"), std::string::npos);
}

TEST_F(ForestTest, CoincidentBlockIsOneBlockInEveryChainOfItsOrders) {
  auto b = build.make(c121, 1, {}, 1.0);
  forest.admit(b, 1.0);
  EXPECT_TRUE(b->is_coincident());
  for (const auto& chain : {root, c12, c121}) {
    EXPECT_TRUE(forest.is_member(b->id, *forest.tracked_index(chain))) << chain;
  }
  EXPECT_FALSE(forest.is_member(b->id, *forest.tracked_index(c11)));
  EXPECT_EQ(forest.anchor(b->id, *forest.tracked_index(c121)), b->id);
}

TEST_F(ForestTest, MalformedBlocksAreRejected) {
  auto b = std::make_shared<Block>(*build.make(c111, 3, {}, 1.0));
  b->predecessors.push_back(genesis_id);
  EXPECT_EQ(forest.admit(b, 1.0).result, AdmissionResult::rejected);

  auto not_leaf = std::make_shared<Block>(*build.make(c111, 3, {}, 1.0));
  not_leaf->leaf = c11;
  EXPECT_EQ(forest.admit(not_leaf, 1.0).result, AdmissionResult::rejected);
}

TEST_F(ForestTest, PredecessorFoundLaterIsRejected) {
  auto a = build.make(c111, 3, {}, 5.0);
  forest.admit(a, 5.0);
  auto early = std::make_shared<Block>(*build.make(c111, 3, {{3, a->id}}, 6.0));
  early->found_time = 4.0;
  EXPECT_EQ(forest.admit(early, 6.0).result, AdmissionResult::rejected);
}

TEST_F(ForestTest, SliceForestIgnoresUntrackedChains) {
  BlockForest slice(build.hierarchy(), build.schedule(), {root, c11, c111}, build.genesis());
  // A block mined on {1,2,1} at order 1 only belongs to the root for this node.
  auto other = build.make(c121, 3, {}, 1.0);
  auto b = build.make(c121, 1, {{1, genesis_id}, {2, genesis_id}, {3, other->id}}, 2.0);
  EXPECT_EQ(slice.admit(b, 2.0).result, AdmissionResult::admitted);
  EXPECT_TRUE(slice.is_member(b->id, *slice.tracked_index(root)));
}

TEST_F(ForestTest, TrackedChainsMustBeClosedUnderParent) {
  EXPECT_THROW(BlockForest(build.hierarchy(), build.schedule(), {root, c111}, build.genesis()), Error);
}

}  // namespace
}  // namespace blockreduce
