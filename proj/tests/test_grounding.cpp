#include <gtest/gtest.h>

#include <random>
#include <set>

#include "bottomup/envs/registry.hpp"
#include "bottomup/grounding.hpp"

using namespace bottomup;

namespace {

UIElement element_at(int c0, int r0, int c1, int r1) {
  UIElement e;
  e.bbox = {c0, r0, c1, r1};
  e.center = {(c0 + c1) / 2, (r0 + r1) / 2};
  e.color = 1;
  return e;
}

std::vector<UIElement> n_elements(int n) {
  std::vector<UIElement> out;
  for (int i = 0; i < n; ++i) out.push_back(element_at(i * 3, 0, i * 3 + 1, 1));
  return out;
}

bool is_key(const AtomicAction& a) { return std::holds_alternative<Key>(a); }

}  // namespace

TEST(Segment, Background) {
  EXPECT_TRUE(segment(Observation(24, 16, std::vector<Cell>(384))).empty());
}

TEST(Segment, InitialMicroSpireMatchesFloodFillOracle) {
  // bbox / color / cell count per element, from tests/oracles/freeze.py.
  struct Expected {
    BoundingBox bbox;
    int color;
    std::size_t cells;
  };
  const std::vector<Expected> expected{
      {{15, 1, 21, 6}, 2, 42}, {{1, 5, 5, 10}, 1, 30},   {{9, 11, 11, 15}, 4, 15}, {{13, 11, 15, 15}, 4, 15},
      {{17, 11, 19, 15}, 5, 15}, {{6, 12, 7, 13}, 3, 4}, {{21, 12, 23, 14}, 6, 9}};
  MicroSpire env;
  const auto elems = segment(env.reset(0));
  ASSERT_EQ(elems.size(), expected.size());
  for (std::size_t i = 0; i < elems.size(); ++i) {
    EXPECT_EQ(elems[i].bbox, expected[i].bbox) << i;
    EXPECT_EQ(elems[i].color, expected[i].color) << i;
    EXPECT_EQ(elems[i].cell_count, expected[i].cells) << i;
  }
}

TEST(Segment, Deterministic) {
  MicroSpire env;
  const auto obs = env.reset(3);
  EXPECT_EQ(segment(obs), segment(obs));
}

TEST(Segment, SameColorSplitsByConnectivity) {
  std::vector<Cell> cells(9);
  cells[0] = cells[2] = Cell{1, 1};  // two cells on one row, gap between
  cells[4] = Cell{1, 1};             // diagonal only: not 4-connected
  const auto elems = segment(Observation(3, 3, cells));
  EXPECT_EQ(elems.size(), 3u);
}

TEST(Segment, InvariantsOnPlayedScreens) {
  std::mt19937_64 rng(4);
  for (int ep = 0; ep < 40; ++ep) {
    auto env = make_environment(ep % 2 ? "microspire" : "buttonworld");
    env->reset(rng());
    for (int step = 0; step < 20 && !env->terminal(); ++step) {
      const auto obs = env->observe();
      const auto elems = segment(obs);
      std::size_t filled = 0;
      for (const auto& c : obs.cells()) filled += c.background() ? 0 : 1;
      ASSERT_LE(elems.size(), filled);
      std::size_t covered = 0;
      for (std::size_t i = 0; i < elems.size(); ++i) {
        const auto& e = elems[i];
        ASSERT_TRUE(obs.size().contains(e.bbox.col_min, e.bbox.row_min));
        ASSERT_TRUE(obs.size().contains(e.bbox.col_max, e.bbox.row_max));
        ASSERT_EQ(e.center.col, (e.bbox.col_min + e.bbox.col_max) / 2);
        ASSERT_EQ(e.center.row, (e.bbox.row_min + e.bbox.row_max) / 2);
        for (std::size_t j = i + 1; j < elems.size(); ++j) ASSERT_FALSE(e.bbox.overlaps(elems[j].bbox));
        covered += e.cell_count;
      }
      ASSERT_EQ(covered, filled);
      ASSERT_EQ(segment(obs), elems);
      const auto actions = propose_actions(elems, 32, rng());
      for (const auto& a : actions) {
        if (const auto* c = std::get_if<Click>(&a)) {
          ASSERT_TRUE(std::any_of(elems.begin(), elems.end(), [&](const auto& e) { return e.center == c->at; }));
        } else if (const auto* d = std::get_if<Drag>(&a)) {
          ASSERT_TRUE(std::any_of(elems.begin(), elems.end(), [&](const auto& e) { return e.center == d->from; }));
          ASSERT_TRUE(std::any_of(elems.begin(), elems.end(), [&](const auto& e) { return e.center == d->to; }));
        } else {
          ASSERT_TRUE(is_key(a));
        }
      }
      env->apply(actions[rng() % actions.size()]);
    }
  }
}

TEST(Propose, NoElements) {
  const auto actions = propose_actions({}, 10, 1);
  ASSERT_EQ(actions.size(), 7u);
  EXPECT_TRUE(std::all_of(actions.begin(), actions.end(), is_key));
}

TEST(Propose, FullPool) {
  const auto actions = propose_actions(n_elements(3), 100, 1);
  ASSERT_EQ(actions.size(), 16u);
  int clicks = 0, drags = 0, keys = 0;
  for (const auto& a : actions) {
    clicks += std::holds_alternative<Click>(a);
    drags += std::holds_alternative<Drag>(a);
    keys += is_key(a);
  }
  EXPECT_EQ(clicks, 3);
  EXPECT_EQ(drags, 6);
  EXPECT_EQ(keys, 7);
}

TEST(Propose, SubsampleKeepsClicks) {
  const auto elems = n_elements(7);
  const auto a = propose_actions(elems, 10, 42);
  const auto b = propose_actions(elems, 10, 42);
  ASSERT_EQ(a.size(), 10u);
  EXPECT_EQ(a, b);
  for (const auto& e : elems) {
    EXPECT_NE(std::find(a.begin(), a.end(), AtomicAction(Click{e.center})), a.end());
  }
  std::set<std::string> distinct;
  for (const auto& x : a) distinct.insert(to_string(x));
  EXPECT_EQ(distinct.size(), a.size());
}

TEST(Propose, SeedChangesSubsample) {
  const auto elems = n_elements(7);
  std::set<std::string> variants;
  for (std::uint64_t s = 0; s < 20; ++s) variants.insert(to_string(std::span<const AtomicAction>(propose_actions(elems, 12, s))));
  EXPECT_GT(variants.size(), 1u);
}

TEST(Propose, BudgetBelowClicks) {
  const auto a = propose_actions(n_elements(7), 4, 9);
  ASSERT_EQ(a.size(), 4u);
  EXPECT_TRUE(std::all_of(a.begin(), a.end(), [](const auto& x) { return std::holds_alternative<Click>(x); }));
}

TEST(Propose, ZeroBudgetRejected) { EXPECT_THROW(propose_actions({}, 0, 0), InvalidArgument); }
