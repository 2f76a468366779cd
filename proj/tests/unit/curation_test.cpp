#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>

#include "surgcurate/curation.hpp"
#include "surgcurate/error.hpp"
#include "surgcurate/kmeans.hpp"
#include "surgcurate/random.hpp"
#include "surgcurate_app/fixtures.hpp"
#include "test_support.hpp"

using namespace surgcurate;

namespace {

// Hands out one unit at a time, cycling over children in index order and
// skipping children that reached their cap.
std::vector<std::uint64_t> round_robin_oracle(std::uint64_t quota, const std::vector<std::uint64_t>& caps) {
  std::vector<std::uint64_t> out(caps.size(), 0);
  while (quota > 0) {
    bool gave = false;
    for (std::size_t i = 0; i < caps.size() && quota > 0; ++i) {
      if (out[i] < caps[i]) {
        ++out[i];
        --quota;
        gave = true;
      }
    }
    if (!gave) break;
  }
  return out;
}

ClusterModel flat_model(std::size_t k, std::vector<std::uint32_t> assignments, std::size_t dim = 1) {
  ClusterModel m;
  m.k = k;
  m.dim = dim;
  m.centroids.assign(k * dim, 0.0f);
  m.assignments = std::move(assignments);
  return m;
}

}  // namespace

TEST(WaterFill, TwoChildrenExample) {
  EXPECT_EQ(water_fill(40, std::vector<std::uint64_t>{100, 10}), (std::vector<std::uint64_t>{30, 10}));
}

TEST(WaterFill, MatchesRoundRobinOracle) {
  Rng rng(12);
  for (int trial = 0; trial < 5000; ++trial) {
    const auto k = 1 + rng.uniform_index(8);
    std::vector<std::uint64_t> caps(k);
    for (auto& c : caps) c = rng.uniform_index(30);
    const auto total = std::accumulate(caps.begin(), caps.end(), std::uint64_t{0});
    const auto quota = rng.uniform_index(total + 1);
    ASSERT_EQ(water_fill(quota, caps), round_robin_oracle(quota, caps)) << "trial " << trial;
  }
}

TEST(Budget, TotalIsRoundedFractionOfPoints) {
  ClusterTree tree;
  tree.level_sizes = {1};
  tree.levels = {flat_model(1, std::vector<std::uint32_t>(554000, 0))};
  const auto plan = allocate_budget(tree, Rational(1, 10));
  EXPECT_EQ(plan.total_budget, 55400u);
  EXPECT_EQ(plan.quotas[0][0], 55400u);
}

TEST(Budget, FractionOneTakesEveryPoint) {
  ClusterTree tree;
  tree.level_sizes = {3, 2};
  tree.levels = {flat_model(3, {0, 0, 0, 1, 2, 2}), flat_model(2, {0, 1, 1})};
  const auto plan = allocate_budget(tree, Rational(1));
  EXPECT_EQ(plan.quotas[0], (std::vector<std::uint64_t>{3, 1, 2}));
  EXPECT_EQ(plan.quotas[1], (std::vector<std::uint64_t>{3, 3}));
}

TEST(Budget, RejectsFractionsOutsideUnitInterval) {
  ClusterTree tree;
  tree.level_sizes = {1};
  tree.levels = {flat_model(1, {0, 0})};
  for (const auto& f : {Rational(0), Rational(-1, 10), Rational(11, 10)}) {
    try {
      allocate_budget(tree, f);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kFractionOutOfRange);
    }
  }
}

TEST(Budget, TopDownQuotasAreConsistent) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 20 + rng.uniform_index(300), k0 = 2 + rng.uniform_index(10), k1 = 1 + rng.uniform_index(k0 - 1);
    std::vector<std::uint32_t> a0(n), a1(k0);
    for (std::size_t i = 0; i < n; ++i) a0[i] = static_cast<std::uint32_t>(i < k0 ? i : rng.uniform_index(k0));
    for (std::size_t j = 0; j < k0; ++j) a1[j] = static_cast<std::uint32_t>(j < k1 ? j : rng.uniform_index(k1));
    ClusterTree tree;
    tree.level_sizes = {k0, k1};
    tree.levels = {flat_model(k0, a0), flat_model(k1, a1)};
    const Rational fraction(static_cast<std::int64_t>(1 + rng.uniform_index(100)), 100);
    for (auto mode : {AllocationMode::kEqual, AllocationMode::kProportional}) {
      const auto plan = allocate_budget(tree, fraction, mode);
      const auto& leaves = plan.quotas[0];
      const auto& tops = plan.quotas[1];
      ASSERT_EQ(std::accumulate(leaves.begin(), leaves.end(), std::uint64_t{0}), plan.total_budget);
      ASSERT_EQ(std::accumulate(tops.begin(), tops.end(), std::uint64_t{0}), plan.total_budget);
      std::vector<std::uint64_t> child_sum(k1, 0);
      for (std::size_t j = 0; j < k0; ++j) {
        ASSERT_LE(leaves[j], plan.reachable[0][j]);
        child_sum[a1[j]] += leaves[j];
      }
      ASSERT_EQ(child_sum, tops);
      if (mode == AllocationMode::kEqual) {
        // Each top node splits its quota by the round-robin rule.
        for (std::size_t t = 0; t < k1; ++t) {
          std::vector<std::uint64_t> caps, got;
          for (std::size_t j = 0; j < k0; ++j) {
            if (a1[j] == t) caps.push_back(plan.reachable[0][j]), got.push_back(leaves[j]);
          }
          ASSERT_EQ(got, round_robin_oracle(tops[t], caps));
        }
        std::vector<std::uint64_t> top_caps(plan.reachable[1].begin(), plan.reachable[1].end());
        ASSERT_EQ(tops, round_robin_oracle(plan.total_budget, top_caps));
      }
    }
  }
}

TEST(SelectNearest, ForcedOrdering) {
  const EmbeddingMatrix m(1, {2.0f, 0.1f, 0.5f}, {"c", "a", "b"});
  const std::vector<float> centroid = {0};
  const std::vector<std::size_t> rows = {0, 1, 2};
  const auto picked = select_nearest(m.view(), centroid, rows, m.row_ids(), 2);
  ASSERT_EQ(picked.size(), 2u);
  EXPECT_EQ(picked[0].clip_id, "a");
  EXPECT_EQ(picked[1].clip_id, "b");
  EXPECT_EQ(select_nearest(m.view(), centroid, rows, m.row_ids(), 3).size(), 3u);
  try {
    select_nearest(m.view(), centroid, rows, m.row_ids(), 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kQuotaExceedsMembers);
  }
}

TEST(SelectNearest, TiesBreakOnClipId) {
  const EmbeddingMatrix m(1, {1.0f, 1.0f, 0.0f}, {"zeta", "alpha", "mid"});
  const std::vector<float> centroid = {0};
  const std::vector<std::size_t> rows = {0, 1, 2};
  const auto picked = select_nearest(m.view(), centroid, rows, m.row_ids(), 2);
  EXPECT_EQ(picked[0].clip_id, "mid");
  EXPECT_EQ(picked[1].clip_id, "alpha");
}

TEST(SelectNearest, MatchesFullSort) {
  Rng rng(50);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<float> data(50 * 3);
    std::vector<std::string> ids;
    for (auto& x : data) x = static_cast<float>(rng.uniform_index(5));
    for (int i = 0; i < 50; ++i) ids.push_back("id" + std::to_string(rng.next_u64()));
    const EmbeddingMatrix m(3, data, ids);
    const std::vector<float> centroid = {2, 2, 2};
    std::vector<std::size_t> rows(50);
    std::iota(rows.begin(), rows.end(), 0);
    std::vector<std::pair<double, std::string>> all;
    for (auto r : rows) {
      double d = 0;
      for (int t = 0; t < 3; ++t) d += (data[r * 3 + t] - 2.0) * (data[r * 3 + t] - 2.0);
      all.emplace_back(d, ids[r]);
    }
    std::sort(all.begin(), all.end());
    const auto picked = select_nearest(m.view(), centroid, rows, m.row_ids(), 7);
    for (int i = 0; i < 7; ++i) ASSERT_EQ(picked[i].clip_id, all[i].second);
  }
}

TEST(Curate, FractionOneKeepsAllClips) {
  const auto m = fixtures::make_four_blob_fixture();
  const std::vector<std::size_t> levels = {4};
  const auto tree = build_hierarchy(m.view(), levels, 3, {}, canonical_order(m.row_ids()), false);
  const auto set = curate(tree, m, Rational(1));
  EXPECT_EQ(set.entries.size(), m.rows());
}

TEST(Curate, FourBlobQuotasMatchHandSimulation) {
  const auto m = fixtures::make_four_blob_fixture();
  const std::vector<std::size_t> levels = {4};
  const auto tree = build_hierarchy(m.view(), levels, 3, {}, canonical_order(m.row_ids()), false);
  const auto set = curate(tree, m, Rational(1, 4));
  ASSERT_EQ(set.entries.size(), 100u);

  // Independent simulation: 100 units dealt round-robin over the four leaves,
  // each capped at its size.
  std::vector<std::uint64_t> sizes(4, 0);
  for (auto a : tree.levels[0].assignments) sizes[a]++;
  EXPECT_EQ(set.plan.quotas[0], round_robin_oracle(100, sizes));

  std::map<std::string, int> per_blob;
  for (const auto& e : set.entries) per_blob[e.clip_id.substr(0, 6)]++;
  EXPECT_EQ(per_blob["blob00"], 25);
  EXPECT_EQ(per_blob["blob03"], 25);
  for (const char* minority : {"blob00", "blob01", "blob02"}) {
    EXPECT_GT(per_blob[minority] / 100.0, 40.0 / 400.0);
  }
}

TEST(Curate, WritesAndReadsBack) {
  const auto f = fixtures::make_pipeline_fixture();
  const std::vector<std::size_t> levels = {32, 8};
  const auto tree = build_hierarchy(f.embeddings.view(), levels, 8, {}, canonical_order(f.embeddings.row_ids()), false);
  const auto set = curate(tree, f.embeddings, Rational(1, 10));
  EXPECT_EQ(set.entries.size(), 200u);
  EXPECT_TRUE(std::is_sorted(set.entries.begin(), set.entries.end(),
                             [](const auto& a, const auto& b) { return a.clip_id < b.clip_id; }));
  testutil::TempDir dir;
  write_curated(dir / "c.jsonl", set);
  EXPECT_EQ(read_curated(dir / "c.jsonl"), set);
  EXPECT_EQ(set.tree_fingerprint, tree_fingerprint(tree));
}

TEST(Curate, EqualAllocationFlattensSkew) {
  const auto f = fixtures::make_pipeline_fixture();
  const std::vector<std::size_t> levels = {32, 8};
  const auto tree = build_hierarchy(f.embeddings.view(), levels, 8, {}, canonical_order(f.embeddings.row_ids()), false);
  const auto balanced = curate(tree, f.embeddings, Rational(1, 10));
  const auto raw = curate(tree, f.embeddings, Rational(1, 10), AllocationMode::kProportional);
  auto largest_topic = [](const CuratedSet& s) {
    int n = 0;
    for (const auto& e : s.entries) n += e.clip_id.rfind("web-v00", 0) == 0 && e.clip_id < "web-v0060";
    return n;
  };
  EXPECT_LT(largest_topic(balanced), largest_topic(raw));
}
