#include <gtest/gtest.h>

#include "blockreduce/hlcr.hpp"
#include "test_support.hpp"

namespace blockreduce {
namespace {

using testing::BlockBuilder;

const ChainPath root{1};
const ChainPath c1{1, 1};
const ChainPath c2{1, 2};

std::vector<BlockId> ids(std::initializer_list<BlockPtr> blocks) {
  std::vector<BlockId> out{genesis_id};
  for (const auto& b : blocks) out.push_back(b->id);
  return out;
}

TEST(SelectRoot, LinearChainIsCanonical) {
  BlockBuilder b(HierarchyConfig{1, {}}, DifficultySchedule({0.5}));
  std::vector<BlockPtr> chain;
  for (int i = 0; i < 5; ++i) chain.push_back(b.extend(root, 1, i + 1.0));
  EXPECT_EQ(select_canonical_root(b.forest()), ids({chain[0], chain[1], chain[2], chain[3], chain[4]}));
}

TEST(SelectRoot, HeaviestForkWins) {
  BlockBuilder b(HierarchyConfig{1, {}}, DifficultySchedule({0.5}));
  auto a1 = b.make(root, 1, {}, 1.0);
  auto a2 = b.make(root, 1, {{1, a1->id}}, 2.0);
  auto x1 = b.make(root, 1, {}, 1.5);
  auto x2 = b.make(root, 1, {{1, x1->id}}, 2.5);
  auto x3 = b.make(root, 1, {{1, x2->id}}, 3.5);
  EXPECT_EQ(select_canonical_root(b.forest()), ids({x1, x2, x3}));
  (void)a2;
}

TEST(SelectRoot, EqualWeightTieGoesToEarlierReceipt) {
  BlockBuilder b(HierarchyConfig{1, {}}, DifficultySchedule({0.5}));
  auto late = b.make(root, 1, {}, 2.0);
  auto early = b.make(root, 1, {}, 1.0);
  // Received times equal found times in the builder's forest.
  EXPECT_EQ(select_canonical_root(b.forest()), ids({early}));
  EXPECT_TRUE(better_tip(b.forest(), 0, early->id, late->id));
  EXPECT_FALSE(better_tip(b.forest(), 0, late->id, early->id));
}

class TwoOrderTest : public ::testing::Test {
 protected:
  BlockBuilder b{HierarchyConfig{2, {2}}, DifficultySchedule::from_leading_zero_bits({3, 0})};
};

TEST_F(TwoOrderTest, ChildMustKeepParentCanonicalCoincident) {
  // Fork B holds the coincident block X that is canonical in the root.
  auto x = b.make(c1, 1, {}, 1.0);
  auto bx = b.make(c1, 2, {{2, x->id}}, 2.0);
  // Fork A: four child-only blocks that skip X.
  std::vector<BlockPtr> a;
  BlockId prev = genesis_id;
  for (int i = 0; i < 4; ++i) {
    a.push_back(b.make(c1, 2, {{2, prev}}, 1.5 + i));
    prev = a.back()->id;
  }
  const auto root_list = select_canonical_root(b.forest());
  EXPECT_EQ(root_list, ids({x}));
  EXPECT_EQ(select_canonical_child(b.forest(), c1, root_list), ids({x, bx}));
}

TEST_F(TwoOrderTest, WithoutCoincidentsChildIsPlainLongestChain) {
  auto a1 = b.make(c2, 2, {}, 1.0);
  auto a2 = b.make(c2, 2, {{2, a1->id}}, 2.0);
  auto x1 = b.make(c2, 2, {}, 1.5);
  const auto root_list = select_canonical_root(b.forest());
  EXPECT_EQ(root_list, ids({}));
  EXPECT_EQ(select_canonical_child(b.forest(), c2, root_list), ids({a1, a2}));
  (void)x1;
}

TEST_F(TwoOrderTest, ParentReorgDropsCoincidentAndItsDescendants) {
  auto x = b.make(c1, 1, {}, 1.0);
  auto after_x = b.make(c1, 2, {{2, x->id}}, 2.0);
  auto view0 = genesis_view(b.forest());
  auto [v1, plans1] = recompute_view(b.forest(), view0);
  EXPECT_EQ(v1.canonical(c1), ids({x, after_x}));

  // A competing two-block root fork mined on the other child.
  auto y1 = b.make(c2, 1, {}, 3.0);
  auto y2 = b.make(c2, 1, {{1, y1->id}, {2, y1->id}}, 4.0);
  auto [v2, plans2] = recompute_view(b.forest(), v1);
  EXPECT_EQ(v2.canonical(root), ids({y1, y2}));
  EXPECT_EQ(v2.canonical(c1), ids({}));
  EXPECT_EQ(v2.canonical(c2), ids({y1, y2}));

  // Plans come root first and revert the dropped blocks tip first.
  ASSERT_EQ(plans2.size(), 3u);
  EXPECT_EQ(plans2[0].chain, root);
  EXPECT_EQ(plans2[0].revert, std::vector<BlockId>{x->id});
  EXPECT_EQ(plans2[0].apply, (std::vector<BlockId>{y1->id, y2->id}));
  const auto& c1_plan = plans2[1].chain == c1 ? plans2[1] : plans2[2];
  EXPECT_EQ(c1_plan.revert, (std::vector<BlockId>{after_x->id, x->id}));
  EXPECT_TRUE(c1_plan.apply.empty());
}

TEST_F(TwoOrderTest, ExtendingLeafGivesOneApplyPlan) {
  auto a = b.make(c1, 2, {}, 1.0);
  auto [v1, p1] = recompute_view(b.forest(), genesis_view(b.forest()));
  auto next = b.make(c1, 2, {{2, a->id}}, 2.0);
  auto [v2, p2] = recompute_view(b.forest(), v1);
  ASSERT_EQ(p2.size(), 1u);
  EXPECT_EQ(p2[0].chain, c1);
  EXPECT_TRUE(p2[0].revert.empty());
  EXPECT_EQ(p2[0].apply, std::vector<BlockId>{next->id});
}

TEST_F(TwoOrderTest, LosingForkBlockChangesNothing) {
  auto a1 = b.make(c1, 2, {}, 1.0);
  auto a2 = b.make(c1, 2, {{2, a1->id}}, 2.0);
  auto [v1, p1] = recompute_view(b.forest(), genesis_view(b.forest()));
  b.make(c1, 2, {}, 3.0);
  auto [v2, p2] = recompute_view(b.forest(), v1);
  EXPECT_TRUE(p2.empty());
  EXPECT_EQ(v2, v1);
  (void)a2;
}

TEST(DiffLists, RevertsTipFirstAndAppliesForkPointFirst) {
  const ChainPath c{1};
  const auto plan = diff_lists(c, 0, {0, 1, 2, 3}, {0, 1, 4, 5});
  EXPECT_EQ(plan.revert, (std::vector<BlockId>{3, 2}));
  EXPECT_EQ(plan.apply, (std::vector<BlockId>{4, 5}));
}

// Delivers a random forest block by block into a fresh forest and checks the
// incremental tracker, the from-scratch recomputation and the brute-force
// selection agree.
void check_forest_equivalence(std::uint64_t seed, std::size_t max_blocks, bool slice_only) {
  const auto rf = testing::random_forest(seed, max_blocks);
  std::vector<ChainPath> tracked = rf.hierarchy.all_chains();
  if (slice_only) tracked = mining_slice(rf.hierarchy.leaves().front(), rf.hierarchy);
  BlockForest forest(rf.hierarchy, rf.schedule, tracked, rf.genesis);
  ViewTracker tracker(forest);
  CanonicalView replayed = genesis_view(forest);
  std::size_t step = 0;
  for (std::size_t i : rf.delivery) {
    const auto out = forest.admit(rf.blocks[i], rf.arrival[i] + 0.01 * static_cast<double>(step));
    tracker.on_admitted(out.admitted);
    const auto plans = tracker.recompute();
    // Applying the plans to the previous view must give the new view.
    for (const auto& p : plans) {
      auto& list = replayed.lists[p.chain_index];
      for (BlockId r : p.revert) {
        ASSERT_EQ(list.back(), r);
        list.pop_back();
      }
      list.insert(list.end(), p.apply.begin(), p.apply.end());
    }
    ASSERT_EQ(replayed, tracker.view()) << "seed " << seed << " step " << step;
    if (++step % 16 == 0) {
      ASSERT_EQ(recompute_view(forest, genesis_view(forest)).first, tracker.view()) << "seed " << seed;
    }
  }
  const auto scratch = recompute_view(forest, genesis_view(forest)).first;
  ASSERT_EQ(scratch, tracker.view()) << "seed " << seed;
  ASSERT_EQ(testing::brute_force_view(forest), tracker.view()) << "seed " << seed;
}

TEST(HlcrOracle, IncrementalMatchesBruteForceOnRandomForests) {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) check_forest_equivalence(seed, 120, false);
}

TEST(HlcrOracle, SliceTrackingForestsAgreeToo) {
  for (std::uint64_t seed = 101; seed <= 130; ++seed) check_forest_equivalence(seed, 120, true);
}

TEST(HlcrOracle, InvalidationAndRebuildMatchBruteForce) {
  for (std::uint64_t seed = 201; seed <= 230; ++seed) {
    const auto rf = testing::random_forest(seed, 100);
    BlockForest forest = BlockForest::full(rf.hierarchy, rf.schedule, rf.genesis);
    ViewTracker tracker(forest);
    for (std::size_t i : rf.delivery) tracker.on_admitted(forest.admit(rf.blocks[i], rf.arrival[i]).admitted);
    tracker.recompute();
    // Invalidate one canonical leaf-chain block, as a failed state transition would.
    const auto leaf_idx = forest.tracked().size() - 1;
    const auto& list = tracker.canonical(leaf_idx);
    if (list.size() < 3) continue;
    forest.mark_invalid(list[list.size() / 2], "test");
    tracker.rebuild();
    tracker.recompute();
    ASSERT_EQ(testing::brute_force_view(forest), tracker.view()) << "seed " << seed;
  }
}

TEST(HlcrOracle, UndoRestoresThePreviousView) {
  const auto rf = testing::random_forest(42, 80);
  BlockForest forest = BlockForest::full(rf.hierarchy, rf.schedule, rf.genesis);
  ViewTracker tracker(forest);
  for (std::size_t i : rf.delivery) {
    const CanonicalView before = tracker.view();
    tracker.on_admitted(forest.admit(rf.blocks[i], rf.arrival[i]).admitted);
    const auto plans = tracker.recompute();
    const CanonicalView after = tracker.view();
    tracker.undo(plans);
    ASSERT_EQ(tracker.view(), before);
    tracker.recompute();
    ASSERT_EQ(tracker.view(), after);
  }
}

}  // namespace
}  // namespace blockreduce
