#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "gcnshield/adjacency.hpp"
#include "gcnshield/common.hpp"
#include "gcnshield/graph.hpp"
#include "gcnshield/rng.hpp"
#include "gcnshield/split.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace gcnshield;

TEST(BuildGraph, EmptyEdgeListGivesIsolatedNodes) {
  const Graph g = build_graph({}, 3);
  EXPECT_EQ(g.n_nodes(), 3);
  EXPECT_EQ(g.n_edges(), 0);
  for (int v = 0; v < 3; ++v) EXPECT_EQ(g.degree(v), 0);
}

TEST(BuildGraph, DropsDuplicatesAndSelfLoops) {
  BuildStats stats;
  const Graph g = build_graph({{0, 1}, {1, 0}, {1, 1}}, 2, &stats);
  EXPECT_EQ(g.n_edges(), 1);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_EQ(stats.duplicates_dropped, 1);
  EXPECT_EQ(stats.self_loops_dropped, 1);
}

TEST(BuildGraph, EndpointOutOfRangeThrows) {
  EXPECT_THROW(build_graph({{0, 3}}, 3), InputError);
  EXPECT_THROW(build_graph({{-1, 0}}, 3), InputError);
}

TEST(BuildGraph, SymmetricSortedValidated) {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const Graph g = synthetic::random_graph(30, 0.2, rng);
    EXPECT_NO_THROW(g.validate());
    for (int u = 0; u < g.n_nodes(); ++u)
      for (int v : g.neighbors(u)) EXPECT_TRUE(g.has_edge(v, u));
  }
}

TEST(BuildGraph, EdgeListRoundTrip) {
  Rng rng(5);
  const Graph g = synthetic::random_graph(25, 0.15, rng);
  const Graph g2 = build_graph(g.edge_list(), g.n_nodes());
  EXPECT_TRUE(g == g2);
}

TEST(LHopNeighborhood, ZeroHopsIsSelf) {
  const Graph g = build_graph({{0, 1}, {1, 2}}, 3);
  EXPECT_EQ(l_hop_neighborhood(g, 1, 0), (std::vector<int>{1}));
}

TEST(LHopNeighborhood, PathGraphTwoHops) {
  const Graph g = build_graph({{0, 1}, {1, 2}, {2, 3}}, 4);
  EXPECT_EQ(l_hop_neighborhood(g, 0, 2), (std::vector<int>{0, 1, 2}));
}

TEST(LHopNeighborhood, MatchesBfsOracleExhaustively) {
  Rng rng(29);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 20 + rng.index(31);  // up to 50 nodes
    const Graph g = synthetic::random_graph(n, 0.2, rng);
    for (int v = 0; v < n; ++v) {
      const auto dist = oracles::bfs_distances(g, v);
      for (int hops : {0, 1, 2, 3}) {
        std::vector<int> expected;
        for (int u = 0; u < n; ++u)
          if (dist[static_cast<std::size_t>(u)] >= 0 && dist[static_cast<std::size_t>(u)] <= hops)
            expected.push_back(u);
        EXPECT_EQ(l_hop_neighborhood(g, v, hops), expected) << "n=" << n << " v=" << v;
      }
    }
  }
}

TEST(NormalizedAdjacency, IsolatedNodeIsUnit) {
  const auto a = normalized_adjacency(build_graph({}, 1));
  EXPECT_EQ(a.rows(), 1);
  EXPECT_DOUBLE_EQ(static_cast<double>(a.coeff(0, 0)), 1.0);
}

TEST(NormalizedAdjacency, SingleEdgeAllHalves) {
  const auto a = normalized_adjacency(build_graph({{0, 1}}, 2));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      EXPECT_DOUBLE_EQ(static_cast<double>(a.coeff(i, j)), 0.5);
}

TEST(NormalizedAdjacency, PathGraphFrozenValues) {
  const auto a = normalized_adjacency(build_graph({{0, 1}, {1, 2}}, 3));
  EXPECT_NEAR(static_cast<double>(a.coeff(0, 1)), 1.0 / std::sqrt(6.0), 1e-15);
  EXPECT_NEAR(static_cast<double>(a.coeff(1, 1)), 1.0 / 3.0, 1e-15);
}

TEST(NormalizedAdjacency, InvariantsOnRandomGraphs) {
  Rng rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const Graph g = synthetic::random_graph(40, 0.15, rng);
    const auto a = normalized_adjacency(g);
    const Mat dense = Mat(a);
    EXPECT_LT((dense - dense.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    for (int v = 0; v < g.n_nodes(); ++v) {
      EXPECT_NEAR(static_cast<double>(dense(v, v)), 1.0 / (g.degree(v) + 1.0), 1e-15);
      int nnz = 0;
      for (int u = 0; u < g.n_nodes(); ++u)
        if (dense(v, u) != 0) ++nnz;
      EXPECT_EQ(nnz, g.degree(v) + 1);
    }
    const Mat oracle = oracles::dense_normalized_adjacency(g);
    EXPECT_LT((dense - oracle).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(NormalizedEntry, MatchesMatrixEntries) {
  Rng rng(17);
  const Graph g = synthetic::random_graph(25, 0.2, rng);
  const Mat dense = Mat(normalized_adjacency(g));
  for (int u = 0; u < g.n_nodes(); ++u) {
    EXPECT_DOUBLE_EQ(static_cast<double>(normalized_entry(g, u, u)),
                     static_cast<double>(dense(u, u)));
    for (int v : g.neighbors(u))
      EXPECT_DOUBLE_EQ(static_cast<double>(normalized_entry(g, u, v)),
                       static_cast<double>(dense(u, v)));
  }
}

TEST(SampleSplit, CountsAndPartition) {
  Rng data_rng(1);
  const auto ds = synthetic::make_sbm({.n_per_class = 20, .n_classes = 7}, data_rng);
  Rng rng(42);
  const NodeSplit s = sample_split(ds.labels, 10, 50, rng);
  EXPECT_EQ(s.train.size(), 70u);
  EXPECT_EQ(s.attacked.size(), 50u);
  EXPECT_EQ(s.train.size() + s.test.size(), static_cast<std::size_t>(ds.n_nodes()));

  std::set<int> train(s.train.begin(), s.train.end());
  for (int v : s.test) EXPECT_FALSE(train.count(v));
  std::set<int> test(s.test.begin(), s.test.end());
  for (int v : s.attacked) EXPECT_TRUE(test.count(v));

  std::vector<int> per_class(7, 0);
  for (int v : s.train) per_class[static_cast<std::size_t>(ds.labels[v])]++;
  for (int c = 0; c < 7; ++c) EXPECT_EQ(per_class[static_cast<std::size_t>(c)], 10);
}

TEST(SampleSplit, DeterministicPerSeed) {
  Rng data_rng(2);
  const auto ds = synthetic::make_sbm({.n_per_class = 15, .n_classes = 3}, data_rng);
  Rng a(7), b(7), c(8);
  const NodeSplit s1 = sample_split(ds.labels, 5, 10, a);
  const NodeSplit s2 = sample_split(ds.labels, 5, 10, b);
  const NodeSplit s3 = sample_split(ds.labels, 5, 10, c);
  EXPECT_EQ(s1.train, s2.train);
  EXPECT_EQ(s1.attacked, s2.attacked);
  EXPECT_FALSE(s1.train == s3.train && s1.attacked == s3.attacked);
}

TEST(SampleSplit, BoundaryAndErrors) {
  LabelVector labels{{0, 1, 2}, 3};
  Rng rng(1);
  const NodeSplit s = sample_split(labels, 1, 0, rng);
  EXPECT_EQ(s.train.size(), 3u);
  EXPECT_TRUE(s.test.empty());

  Rng rng2(1);
  EXPECT_THROW(sample_split(labels, 2, 0, rng2), ConfigError);
  Rng rng3(1);
  EXPECT_THROW(sample_split(labels, 1, 1, rng3), ConfigError);  // no test nodes left
}

TEST(Ratio, RecoversDecimalsExactly) {
  EXPECT_EQ(Ratio::from_double(0.5), Ratio(1, 2));
  EXPECT_EQ(Ratio::from_double(0.75), Ratio(3, 4));
  EXPECT_EQ(Ratio::from_double(0.1), Ratio(1, 10));
  EXPECT_EQ(Ratio::from_double(0.25), Ratio(1, 4));
  EXPECT_EQ(Ratio::from_double(1.0), Ratio(1, 1));
}

TEST(Ratio, ExactCeilAvoidsFloatHazard) {
  // 0.1 * 10 in doubles is 1.0000000000000002; exact arithmetic must give 1.
  EXPECT_EQ(Ratio(1, 10).ceil_mul(10), 1);
  EXPECT_EQ(Ratio(3, 4).ceil_mul(4), 3);
  EXPECT_EQ(Ratio(3, 4).ceil_mul(2), 2);  // ceil(1.5)
  EXPECT_EQ(Ratio(1, 2).ceil_mul(5), 3);
  EXPECT_EQ(Ratio(1, 1).ceil_mul(7), 7);
  EXPECT_EQ(Ratio(1, 10).floor_mul(19), 1);
  for (std::int64_t d = 0; d <= 100; ++d) {
    EXPECT_EQ(Ratio(3, 4).ceil_mul(d) + Ratio(1, 4).floor_mul(d), d);  // ceil(x)+floor(d-x)=d
  }
}

TEST(Ratio, RejectsInvalid) {
  EXPECT_THROW(Ratio(-1, 2), ConfigError);
  EXPECT_THROW(Ratio(1, 0), ConfigError);
}

TEST(ArgmaxLowest, TieBreaksByLowestIndex) {
  Vec v(4);
  v << 0.1, 0.4, 0.4, 0.2;
  EXPECT_EQ(argmax_lowest(v), 1);
  Vec u = Vec::Constant(3, 1.0 / 3);
  EXPECT_EQ(argmax_lowest(u), 0);
}

TEST(RngStreams, DeterministicAndDistinct) {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());

  Rng s0 = Rng::derive(99, 0);
  Rng s1 = Rng::derive(99, 1);
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (s0.next_u64() == s1.next_u64()) ++same;
  EXPECT_EQ(same, 0);
}

TEST(RngSampling, WithoutReplacementIsDistinctAndComplete) {
  Rng rng(7);
  std::vector<int> pool{0, 1, 2, 3, 4, 5, 6, 7};
  const auto all = rng.sample_without_replacement(pool, 8);
  std::set<int> seen(all.begin(), all.end());
  EXPECT_EQ(seen.size(), 8u);

  const auto some = rng.sample_without_replacement(pool, 3);
  EXPECT_EQ(some.size(), 3u);
  std::set<int> s2(some.begin(), some.end());
  EXPECT_EQ(s2.size(), 3u);
}

TEST(RngSampling, UniformBelowCoversRange) {
  Rng rng(13);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 5000; ++i) counts[static_cast<std::size_t>(rng.below(5))]++;
  for (int c : counts) EXPECT_GT(c, 800);  // ~1000 each
}

TEST(LabelVector, ValidatesRange) {
  LabelVector good{{0, 1, 1, 0}, 2};
  EXPECT_NO_THROW(good.validate());
  LabelVector bad{{0, 2}, 2};
  EXPECT_THROW(bad.validate(), InputError);
}
