#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "g2m/error.hpp"
#include "g2m/patch_geometry.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace g2m;

using g2m::testing::pixel_histogram;

TEST(Geometry, AxisClassExamples) {
  EXPECT_EQ(axis_class({16, 32}, 16), AxisClass::Edge);
  EXPECT_EQ(axis_class({10, 21}, 16), AxisClass::Cross);
  EXPECT_EQ(axis_class({17, 23}, 16), AxisClass::Interior);
  EXPECT_EQ(axis_class({0, 8}, 16), AxisClass::Edge);
  EXPECT_EQ(axis_class({0, 32}, 16), AxisClass::Cross);
}

TEST(Geometry, CombineIsSymmetricWithSixValues) {
  std::set<InteractionType> seen;
  for (auto a : {AxisClass::Interior, AxisClass::Edge, AxisClass::Cross})
    for (auto b : {AxisClass::Interior, AxisClass::Edge, AxisClass::Cross}) {
      EXPECT_EQ(combine(a, b), combine(b, a));
      seen.insert(combine(a, b));
    }
  EXPECT_EQ(seen.size(), 6u);
  for (auto t : kInteractionTypes) EXPECT_EQ(parse_interaction(to_string(t)), t);
  EXPECT_EQ(to_string(InteractionType::EdgCro), "Edg-Cro");
}

TEST(Geometry, AlignedGridsAreAllEdgeEdge) {
  const PatchConfig cfg;
  for (int n : {32, 64}) {
    const auto h = type_distribution(n, cfg);
    EXPECT_EQ(h[static_cast<int>(InteractionType::EdgEdg)], n * n) << n;
  }
}

TEST(Geometry, N48HasNoInteriorTypes) {
  const auto h = type_distribution(48, PatchConfig{});
  EXPECT_EQ(h[static_cast<int>(InteractionType::IntInt)], 0);
  EXPECT_EQ(h[static_cast<int>(InteractionType::IntEdg)], 0);
  EXPECT_EQ(h[static_cast<int>(InteractionType::IntCro)], 0);
}

TEST(Geometry, MatchesScriptedOracleHistograms) {
  const auto golden = g2m::testing::load_golden("type_distribution.json");
  for (const auto& c : golden["cases"]) {
    const PatchConfig cfg{c["image_size"], c["patch"]};
    const auto h = type_distribution(c["n"], cfg);
    for (auto t : kInteractionTypes) {
      EXPECT_EQ(h[static_cast<int>(t)], c["histogram"][std::string(to_string(t))].get<std::int64_t>())
          << "n=" << c["n"] << " " << to_string(t);
    }
  }
}

TEST(Geometry, ClosedFormEqualsPixelOracle) {
  for (const PatchConfig cfg : {PatchConfig{512, 16}, PatchConfig{448, 14}}) {
    for (int n = 2; n <= 64; ++n) EXPECT_EQ(type_distribution(n, cfg), pixel_histogram(n, cfg)) << n;
  }
}

TEST(Geometry, AreaDominanceMatchesPixelCount) {
  const PatchConfig cfg{64, 16};
  for (int n : {3, 5, 7, 10}) {
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        const auto ry = cell_bounds(r, n, 64), rx = cell_bounds(c, n, 64);
        std::map<int, int> counts;
        for (int y = ry.begin; y < ry.end; ++y)
          for (int x = rx.begin; x < rx.end; ++x) ++counts[(y / 16) * 4 + x / 16];
        int best = 0;
        for (auto& [k, v] : counts) best = std::max(best, v);
        EXPECT_NEAR(area_dominance(r, c, n, cfg), static_cast<double>(best) / (ry.length() * rx.length()), 1e-12);
      }
    }
  }
  EXPECT_DOUBLE_EQ(area_dominance(0, 0, 32, PatchConfig{}), 1.0);
}

TEST(Geometry, AccuracyByTypeOrderingFixture) {
  // n=62 at 512/16 has Int-Int, Edg-Edg and Cro-Cro cells; fix per-type accuracy and read it back.
  const PatchConfig cfg;
  const int n = 62;
  AccuracyGrid g(n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const auto t = cell_interaction(r, c, n, cfg);
      const int i = r * n + c;
      g.totals[i] = 10;
      g.hits[i] = t == InteractionType::IntInt ? 10 : t == InteractionType::EdgEdg ? 8 : 5;
    }
  }
  const auto by = accuracy_by_type(g, cfg);
  EXPECT_DOUBLE_EQ(by.at(InteractionType::IntInt), 1.0);
  EXPECT_NEAR(by.at(InteractionType::EdgEdg), 0.8, 1e-12);
  EXPECT_DOUBLE_EQ(by.at(InteractionType::CroCro), 0.5);
}

TEST(Geometry, AccuracyByTypeOmitsAbsentTypes) {
  AccuracyGrid g(64);
  std::fill(g.totals.begin(), g.totals.end(), 1);
  const auto by = accuracy_by_type(g, PatchConfig{});
  ASSERT_EQ(by.size(), 1u);
  EXPECT_EQ(by.begin()->first, InteractionType::EdgEdg);
}

TEST(Geometry, RejectsBadConfig) {
  EXPECT_THROW(PatchConfig({500, 16}).validate(), InvalidSpec);
  EXPECT_THROW(type_distribution(0, PatchConfig{}), InvalidSpec);
}
