#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "gcnshield/adjacency.hpp"
#include "gcnshield/gcn.hpp"
#include "gcnshield/graph.hpp"
#include "gcnshield/rng.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "support/testutil.hpp"

using namespace gcnshield;

namespace {

struct Instance {
  Graph g;
  Mat x;
  LabelVector labels;
  std::vector<int> train;
};

Instance random_instance(int n, int f, int classes, double edge_prob, Rng& rng) {
  Instance inst;
  inst.g = synthetic::random_graph(n, edge_prob, rng);
  inst.x = synthetic::random_features(n, f, 0.4, rng);
  inst.labels = synthetic::random_labels(n, classes, rng);
  for (int v = 0; v < n; v += 2) inst.train.push_back(v);
  return inst;
}

double max_rel_error(const Mat& analytic, const Mat& fd) {
  double worst = 0;
  for (Eigen::Index i = 0; i < analytic.rows(); ++i)
    for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
      const double a = static_cast<double>(analytic(i, j));
      const double b = static_cast<double>(fd(i, j));
      const double denom = std::max({std::abs(a), std::abs(b), 1e-4});
      worst = std::max(worst, std::abs(a - b) / denom);
    }
  return worst;
}

}  // namespace

TEST(InitModel, GlorotBoundsAndDeterminism) {
  Rng a(5), b(5);
  const GcnModel m1 = init_model(1, 1, 1, a);
  EXPECT_LE(std::abs(static_cast<double>(m1.w0(0, 0))), std::sqrt(3.0));
  EXPECT_LE(std::abs(static_cast<double>(m1.w1(0, 0))), std::sqrt(3.0));

  const GcnModel m2 = init_model(1, 1, 1, b);
  EXPECT_EQ(m1.w0(0, 0), m2.w0(0, 0));
  EXPECT_EQ(m1.w1(0, 0), m2.w1(0, 0));

  Rng c(9);
  const GcnModel big = init_model(1433, 16, 7, c);
  EXPECT_EQ(big.w0.rows(), 1433);
  EXPECT_EQ(big.w0.cols(), 16);
  EXPECT_EQ(big.w1.rows(), 16);
  EXPECT_EQ(big.w1.cols(), 7);
  const double bound0 = std::sqrt(6.0 / (1433 + 16));
  EXPECT_LE(static_cast<double>(big.w0.cwiseAbs().maxCoeff()), bound0);
}

TEST(Forward, SingleNodeIdentityWeights) {
  const Graph g = build_graph({}, 1);
  Mat x(1, 2);
  x << 1, 0;
  GcnModel m{Mat::Identity(2, 2), Mat::Identity(2, 2)};
  const SoftmaxOutput out = forward(m, normalized_adjacency(g), x);
  const double e = std::exp(1.0);
  EXPECT_NEAR(static_cast<double>(out(0, 0)), e / (1 + e), 1e-12);
  EXPECT_NEAR(static_cast<double>(out(0, 1)), 1 / (1 + e), 1e-12);
}

TEST(Forward, ZeroWeightsGiveUniformRows) {
  Rng rng(3);
  const Graph g = synthetic::random_graph(8, 0.3, rng);
  const Mat x = synthetic::random_features(8, 5, 0.5, rng);
  GcnModel m{Mat::Zero(5, 4), Mat::Zero(4, 3)};
  const SoftmaxOutput out = forward(m, normalized_adjacency(g), x);
  for (int i = 0; i < 8; ++i)
    for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(static_cast<double>(out(i, c)), 1.0 / 3.0);
}

TEST(Forward, MatchesDenseOracle) {
  Rng rng(21);
  for (int rep = 0; rep < 5; ++rep) {
    const Graph g = synthetic::random_graph(5, 0.4, rng);
    const Mat x = synthetic::random_features(5, 6, 0.5, rng);
    Rng wr(100 + static_cast<std::uint64_t>(rep));
    const GcnModel m = init_model(6, 4, 3, wr);
    const SoftmaxOutput out = forward(m, normalized_adjacency(g), x);
    const Mat oracle = oracles::dense_gcn_forward(m.w0, m.w1, g, x);
    EXPECT_LT((out - oracle).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Forward, RowsSumToOne) {
  Rng rng(33);
  const Graph g = synthetic::random_graph(20, 0.2, rng);
  const Mat x = synthetic::random_features(20, 10, 0.3, rng);
  Rng wr(1);
  const GcnModel m = init_model(10, 8, 4, wr);
  const SoftmaxOutput out = forward(m, normalized_adjacency(g), x);
  for (int i = 0; i < 20; ++i) {
    EXPECT_NEAR(static_cast<double>(out.row(i).sum()), 1.0, 1e-9);
    EXPECT_GE(out.row(i).minCoeff(), 0.0);
  }
}

TEST(Forward, DimensionMismatchThrows) {
  const Graph g = build_graph({{0, 1}}, 2);
  const Mat x = Mat::Zero(2, 3);
  GcnModel m{Mat::Zero(4, 2), Mat::Zero(2, 2)};  // expects F=4
  EXPECT_THROW(forward(m, normalized_adjacency(g), x), InputError);
}

TEST(Forward, LabelPermutationEquivariance) {
  Rng rng(44);
  const Graph g = synthetic::random_graph(12, 0.25, rng);
  const Mat x = synthetic::random_features(12, 7, 0.4, rng);
  Rng wr(2);
  const GcnModel m = init_model(7, 5, 4, wr);
  const SoftmaxOutput base = forward(m, normalized_adjacency(g), x);

  const std::vector<int> perm{2, 0, 3, 1};  // class c -> perm[c]
  GcnModel pm = m;
  for (int c = 0; c < 4; ++c) pm.w1.col(perm[static_cast<std::size_t>(c)]) = m.w1.col(c);
  const SoftmaxOutput permuted = forward(pm, normalized_adjacency(g), x);
  for (int i = 0; i < 12; ++i)
    for (int c = 0; c < 4; ++c)
      EXPECT_NEAR(static_cast<double>(permuted(i, perm[static_cast<std::size_t>(c)])),
                  static_cast<double>(base(i, c)), 1e-12);
}

TEST(LossGradients, MatchFiniteDifferences) {
  Rng rng(55);
  for (int rep = 0; rep < 3; ++rep) {
    Instance inst = random_instance(12, 6, 3, 0.3, rng);
    Rng wr(200 + static_cast<std::uint64_t>(rep));
    GcnModel m = init_model(6, 5, 3, wr);
    const auto a = normalized_adjacency(inst.g);
    const double wd = 5e-4;

    const LossGrads lg = loss_and_gradients(m, a, inst.x, inst.labels, inst.train, wd);
    auto loss_of = [&] {
      return loss_and_gradients(m, a, inst.x, inst.labels, inst.train, wd).loss;
    };

    Mat fd0(m.w0.rows(), m.w0.cols());
    for (Eigen::Index i = 0; i < m.w0.rows(); ++i)
      for (Eigen::Index j = 0; j < m.w0.cols(); ++j)
        fd0(i, j) = oracles::finite_difference(m.w0, i, j, 1e-5, loss_of);
    Mat fd1(m.w1.rows(), m.w1.cols());
    for (Eigen::Index i = 0; i < m.w1.rows(); ++i)
      for (Eigen::Index j = 0; j < m.w1.cols(); ++j)
        fd1(i, j) = oracles::finite_difference(m.w1, i, j, 1e-5, loss_of);

    EXPECT_LT(max_rel_error(lg.d_w0, fd0), 1e-4) << "instance " << rep;
    EXPECT_LT(max_rel_error(lg.d_w1, fd1), 1e-4) << "instance " << rep;
  }
}

TEST(Train, ZeroEpochsLeavesWeightsUnchanged) {
  Rng rng(66);
  Instance inst = random_instance(10, 5, 2, 0.3, rng);
  Rng wr(1);
  const GcnModel m0 = init_model(5, 4, 2, wr);
  TrainConfig cfg;
  cfg.epochs = 0;
  Rng tr(2);
  const GcnModel m1 = train(m0, normalized_adjacency(inst.g), inst.x, inst.labels, inst.train, cfg, tr);
  EXPECT_TRUE(testutil::same_values(m0.w0, m1.w0));
  EXPECT_TRUE(testutil::same_values(m0.w1, m1.w1));
}

TEST(Train, OverfitsSingleNode) {
  Rng rng(77);
  Instance inst = random_instance(12, 6, 3, 0.3, rng);
  inst.train = {4};
  TrainConfig cfg;
  cfg.dropout = 0.0;
  std::vector<double> losses;
  Rng wr(3);
  GcnModel m = init_model(6, 16, 3, wr);
  m = train(std::move(m), normalized_adjacency(inst.g), inst.x, inst.labels, inst.train, cfg, wr,
            &losses);
  const double final_ce =
      loss_and_gradients(m, normalized_adjacency(inst.g), inst.x, inst.labels, inst.train, 0.0).loss;
  EXPECT_LT(final_ce, 0.01);

  // dropout off: loss is non-increasing over any 10-epoch window
  ASSERT_EQ(losses.size(), 200u);
  for (std::size_t i = 10; i < losses.size(); ++i)
    EXPECT_LE(losses[i], losses[i - 10] + 1e-9) << "epoch " << i;
}

TEST(Train, DeterministicPerSeed) {
  Rng rng(88);
  Instance inst = random_instance(15, 8, 3, 0.25, rng);
  TrainConfig cfg;
  cfg.epochs = 30;

  auto run = [&](std::uint64_t seed) {
    Rng r(seed);
    GcnModel m = init_model(8, cfg.hidden_dim, 3, r);
    return train(std::move(m), normalized_adjacency(inst.g), inst.x, inst.labels, inst.train, cfg,
                 r);
  };
  const GcnModel a = run(5), b = run(5), c = run(6);
  EXPECT_TRUE(testutil::same_values(a.w0, b.w0));
  EXPECT_TRUE(testutil::same_values(a.w1, b.w1));
  EXPECT_FALSE(testutil::same_values(a.w0, c.w0));
}

TEST(Train, EmptyTrainSetThrows) {
  Rng rng(99);
  Instance inst = random_instance(8, 4, 2, 0.3, rng);
  Rng wr(1);
  GcnModel m = init_model(4, 4, 2, wr);
  TrainConfig cfg;
  EXPECT_THROW(
      train(std::move(m), normalized_adjacency(inst.g), inst.x, inst.labels, {}, cfg, wr),
      ConfigError);
}

TEST(Train, DivergenceNamesEpoch) {
  Rng rng(111);
  Instance inst = random_instance(10, 5, 2, 0.3, rng);
  TrainConfig cfg;
  cfg.learning_rate = 1e200;  // guaranteed blow-up
  cfg.dropout = 0.0;
  Rng wr(1);
  GcnModel m = init_model(5, 4, 2, wr);
  try {
    train(std::move(m), normalized_adjacency(inst.g), inst.x, inst.labels, inst.train, cfg, wr);
    FAIL() << "expected TrainingDiverged";
  } catch (const TrainingDiverged& e) {
    EXPECT_GT(e.epoch, 0);
  }
}

TEST(PredictNodeLocal, IsolatedNodeEqualsSelfForward) {
  const Graph g = build_graph({{1, 2}}, 3);  // node 0 isolated
  Mat x(3, 4);
  x.setZero();
  x(0, 1) = 1;
  x(1, 2) = 1;
  x(2, 3) = 1;
  Rng wr(4);
  const GcnModel m = init_model(4, 3, 2, wr);

  const Vec local = predict_node_local(m, g, x, 0);
  const Graph lone = build_graph({}, 1);
  const SoftmaxOutput alone = forward(m, normalized_adjacency(lone), x.row(0));
  for (int c = 0; c < 2; ++c)
    EXPECT_NEAR(static_cast<double>(local[c]), static_cast<double>(alone(0, c)), 1e-12);
}

TEST(PredictNodeLocal, MatchesFullForwardOnRandomGraphs) {
  Rng rng(123);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 10 + rng.index(21);
    const Graph g = synthetic::random_graph(n, 0.25, rng);
    const Mat x = synthetic::random_features(n, 6, 0.4, rng);
    Rng wr(300 + static_cast<std::uint64_t>(rep));
    const GcnModel m = init_model(6, 5, 3, wr);
    const SoftmaxOutput full = forward(m, normalized_adjacency(g), x);
    for (int v = 0; v < n; ++v) {
      const Vec local = predict_node_local(m, g, x, v);
      for (int c = 0; c < 3; ++c)
        EXPECT_NEAR(static_cast<double>(local[c]), static_cast<double>(full(v, c)), 1e-9)
            << "rep " << rep << " node " << v;
    }
  }
}

TEST(PredictNodeLocal, CompleteGraphCoversEverything) {
  EdgeList edges;
  for (int u = 0; u < 5; ++u)
    for (int v = u + 1; v < 5; ++v) edges.emplace_back(u, v);
  const Graph k5 = build_graph(edges, 5);
  Rng rng(5);
  const Mat x = synthetic::random_features(5, 6, 0.5, rng);
  Rng wr(6);
  const GcnModel m = init_model(6, 4, 3, wr);
  const SoftmaxOutput full = forward(m, normalized_adjacency(k5), x);
  for (int v = 0; v < 5; ++v) {
    const Vec local = predict_node_local(m, k5, x, v);
    for (int c = 0; c < 3; ++c)
      EXPECT_NEAR(static_cast<double>(local[c]), static_cast<double>(full(v, c)), 1e-15);
  }
}

TEST(PredictNodeLocal, OverlayReplacesOneRowVirtually) {
  Rng rng(222);
  const Graph g = synthetic::random_graph(15, 0.25, rng);
  Mat x = synthetic::random_features(15, 6, 0.4, rng);
  const Mat x_before = x;
  Rng wr(7);
  const GcnModel m = init_model(6, 5, 3, wr);

  const Vec donor_row = x.row(3).transpose();
  RowOverlay overlay{8, donor_row};
  const Vec local = predict_node_local(m, g, x, 8, &overlay);
  EXPECT_TRUE(testutil::same_values(x, x_before));  // never mutated

  Mat swapped = x;
  swapped.row(8) = x.row(3);
  const SoftmaxOutput full = forward(m, normalized_adjacency(g), swapped);
  for (int c = 0; c < 3; ++c)
    EXPECT_NEAR(static_cast<double>(local[c]), static_cast<double>(full(8, c)), 1e-9);
}

TEST(Mlp, PredictionDependsOnlyOnOwnRow) {
  Rng rng(333);
  Mat x = synthetic::random_features(10, 5, 0.5, rng);
  Rng wr(8);
  const MlpModel m = init_mlp(5, 4, 3, wr);
  const Vec at4 = predict_mlp(m, x).row(4).transpose();

  Mat shuffled = x;
  shuffled.row(0).swap(shuffled.row(9));
  shuffled.row(2).swap(shuffled.row(7));
  const Vec at4_after = predict_mlp(m, shuffled).row(4).transpose();
  EXPECT_TRUE(testutil::same_values(at4, at4_after));
}

TEST(Mlp, EqualsGcnOnEdgelessGraph) {
  Rng rng(444);
  const Graph g = build_graph({}, 9);
  const Mat x = synthetic::random_features(9, 5, 0.5, rng);
  Rng wr(9);
  const GcnModel gm = init_model(5, 4, 3, wr);
  const MlpModel mm{gm.w0, gm.w1};
  const SoftmaxOutput gcn_out = forward(gm, normalized_adjacency(g), x);
  const SoftmaxOutput mlp_out = predict_mlp(mm, x);
  EXPECT_LT((gcn_out - mlp_out).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Mlp, GradientsMatchFiniteDifferences) {
  Rng rng(555);
  Instance inst = random_instance(10, 5, 3, 0.0, rng);
  Rng wr(10);
  MlpModel m = init_mlp(5, 4, 3, wr);
  const double wd = 5e-4;
  const LossGrads lg = loss_and_gradients(m, inst.x, inst.labels, inst.train, wd);
  auto loss_of = [&] { return loss_and_gradients(m, inst.x, inst.labels, inst.train, wd).loss; };

  Mat fd0(m.w0.rows(), m.w0.cols());
  for (Eigen::Index i = 0; i < m.w0.rows(); ++i)
    for (Eigen::Index j = 0; j < m.w0.cols(); ++j)
      fd0(i, j) = oracles::finite_difference(m.w0, i, j, 1e-5, loss_of);
  EXPECT_LT(max_rel_error(lg.d_w0, fd0), 1e-4);

  Mat fd1(m.w1.rows(), m.w1.cols());
  for (Eigen::Index i = 0; i < m.w1.rows(); ++i)
    for (Eigen::Index j = 0; j < m.w1.cols(); ++j)
      fd1(i, j) = oracles::finite_difference(m.w1, i, j, 1e-5, loss_of);
  EXPECT_LT(max_rel_error(lg.d_w1, fd1), 1e-4);
}

TEST(Mlp, TrainsAboveChanceOnSeparableData) {
  Rng rng(666);
  const auto ds = synthetic::make_sbm({.n_per_class = 20, .n_classes = 3, .signal = 0.8}, rng);
  std::vector<int> train, test;
  for (int v = 0; v < ds.n_nodes(); ++v) (v % 4 == 0 ? train : test).push_back(v);
  TrainConfig cfg;
  cfg.epochs = 100;
  Rng wr(11);
  MlpModel m = init_mlp(ds.n_features(), cfg.hidden_dim, 3, wr);
  m = train_mlp(std::move(m), ds.features, ds.labels, train, cfg, wr);
  const SoftmaxOutput out = predict_mlp(m, ds.features);
  int correct = 0;
  for (int v : test)
    if (argmax_lowest(out.row(v).transpose()) == ds.labels[v]) ++correct;
  EXPECT_GT(static_cast<double>(correct) / static_cast<double>(test.size()), 0.7);
}
