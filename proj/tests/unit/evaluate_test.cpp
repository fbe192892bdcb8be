#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "fixtures.hpp"
#include "flakysieve/error.hpp"
#include "flakysieve/evaluate.hpp"
#include "oracles.hpp"

namespace flakysieve {
namespace {

constexpr Label kA = FlakyCatCategory::kAsyncWait;
constexpr Label kB = FlakyCatCategory::kConcurrency;
constexpr Label kTime = FlakyCatCategory::kTime;
constexpr Label kOrder = FlakyCatCategory::kTestOrderDependency;

SiameseModel identity(std::size_t dim) {
  std::vector<float> w(dim * dim, 0.0f);
  for (std::size_t i = 0; i < dim; ++i) w[i * dim + i] = 1.0f;
  return SiameseModel({DenseLayer{dim, dim, w, std::vector<float>(dim, 0.0f),
                                  Activation::kIdentity}});
}

CentroidIndex index_of(std::vector<std::pair<Label, std::vector<double>>> points) {
  std::vector<CentroidIndex::Entry> entries;
  for (auto& [label, c] : points) entries.push_back({label, c, 1});
  return CentroidIndex(std::move(entries));
}

TEST(Centroids, MeanOfMembers) {
  std::vector<EmbeddingVector> x = {{0, 0}, {2, 4}, {9, 9}};
  std::vector<Label> labels = {kA, kA, kB};
  auto index = build_centroids(identity(2), x, labels);
  ASSERT_NE(index.find(kA), nullptr);
  EXPECT_EQ(index.find(kA)->centroid, (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(index.find(kA)->count, 2u);
  EXPECT_EQ(index.find(kB)->centroid, (std::vector<double>{9.0, 9.0}));
}

TEST(Centroids, SingleMemberIsItsEncoding) {
  std::vector<EmbeddingVector> x = {{0.5f, -3}};
  std::vector<Label> labels = {kB};
  EXPECT_EQ(build_centroids(identity(2), x, labels).find(kB)->centroid,
            (std::vector<double>{0.5, -3.0}));
}

TEST(Centroids, ExpectedClassAbsent) {
  std::vector<EmbeddingVector> x = {{0, 0}};
  std::vector<Label> labels = {kA};
  std::vector<Label> expected = {kA, kB};
  EXPECT_THROW(build_centroids(identity(2), x, labels, expected), IndexError);
}

TEST(Predict, ExactCentroidAndNearest) {
  auto index = index_of({{kA, {0.0}}, {kB, {10.0}}});
  const float on_b[] = {10.0f};
  const float near_a[] = {2.0f};
  EXPECT_EQ(predict(identity(1), index, on_b), kB);
  EXPECT_EQ(predict(identity(1), index, near_a), kA);
}

TEST(Predict, TieGoesToSmallerToken) {
  // Enum order puts time first; token order puts order_dependency first.
  auto index = index_of({{kTime, {0.0}}, {kOrder, {2.0}}});
  const double mid[] = {1.0};
  EXPECT_EQ(nearest_centroid(index, mid), kOrder);
  auto ab = index_of({{kB, {-1.0}}, {kA, {1.0}}});
  const double zero[] = {0.0};
  EXPECT_EQ(nearest_centroid(ab, zero), kA);
}

TEST(Predict, EmptyIndexAndShape) {
  const float x[] = {1.0f};
  EXPECT_THROW(predict(identity(1), CentroidIndex{}, x), PredictError);
  const float wrong[] = {1.0f, 2.0f};
  EXPECT_THROW(predict(identity(1), index_of({{kA, {0.0}}}), wrong), ShapeError);
}

TEST(Score, PerfectPredictions) {
  std::vector<Label> y = {kA, kB, kB, kTime};
  auto r = score(y, y);
  for (const auto& c : r.per_class) EXPECT_EQ(c.f1, 1.0);
  EXPECT_EQ(r.weighted_avg_f1, 1.0);
  for (std::size_t i = 0; i < r.confusion.size(); ++i) {
    for (std::size_t j = 0; j < r.confusion.size(); ++j) {
      if (i != j) {
        EXPECT_EQ(r.confusion[i][j], 0u);
      }
    }
  }
}

TEST(Score, EightTwoTwo) {
  // 8 TP, 2 FN (truth A predicted B), 2 FP (truth B predicted A).
  std::vector<Label> truth, pred;
  for (int i = 0; i < 8; ++i) truth.push_back(kA), pred.push_back(kA);
  for (int i = 0; i < 2; ++i) truth.push_back(kA), pred.push_back(kB);
  for (int i = 0; i < 2; ++i) truth.push_back(kB), pred.push_back(kA);
  auto r = score(pred, truth);
  const auto* a = r.find(kA);
  EXPECT_DOUBLE_EQ(a->precision, 0.8);
  EXPECT_DOUBLE_EQ(a->recall, 0.8);
  EXPECT_DOUBLE_EQ(a->f1, 0.8);
}

TEST(Score, WeightedAverage) {
  std::vector<Label> truth = {kA, kA, kA, kB};
  std::vector<Label> pred = {kA, kA, kA, kTime};
  auto r = score(pred, truth);
  EXPECT_EQ(r.find(kA)->f1, 1.0);
  EXPECT_EQ(r.find(kB)->f1, 0.0);
  EXPECT_EQ(r.weighted_avg_f1, 0.75);
  EXPECT_EQ(r.total_support(), 4u);
}

TEST(Score, LengthMismatch) {
  std::vector<Label> a = {kA}, b = {kA, kB};
  EXPECT_THROW(score(a, b), ScoreError);
}

TEST(Score, MatchesBruteForce) {
  Rng rng(12);
  const auto labels = labels_of(Taxonomy::kIdoft);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Label> truth, pred;
    const std::size_t n = 1 + rng.index(60);
    for (std::size_t i = 0; i < n; ++i) {
      truth.push_back(labels[rng.index(labels.size())]);
      pred.push_back(labels[rng.index(labels.size())]);
    }
    auto r = score(pred, truth);
    auto oracle = testing::brute_counts(pred, truth);
    ASSERT_EQ(r.per_class.size(), oracle.size());
    for (const auto& c : r.per_class) {
      EXPECT_NEAR(c.f1, testing::oracle_f1(oracle.at(c.label)), 1e-12);
      EXPECT_EQ(c.support, oracle.at(c.label).support);
    }
    EXPECT_NEAR(r.weighted_avg_f1, testing::oracle_weighted_f1(oracle), 1e-12);
  }
}

ExperimentConfig quick_config(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.split = {0.8, seed, false};
  cfg.train.epochs = 20;
  cfg.train.learning_rate = 1e-3;
  cfg.train.hidden_dims = {32};
  cfg.train.embedding_size = 16;
  cfg.train.seed = seed;
  return cfg;
}

TEST(Experiment, SeparatedClustersClassifyWell) {
  auto f = testing::cluster_fixture(5, 20, 16, 1.0, 4.5, 3);
  StoreEmbedder embedder(f.store);
  auto result = run_experiment(f.dataset, embedder, quick_config(1));
  EXPECT_GE(result.report.weighted_avg_f1, 0.95);
  EXPECT_EQ(result.train_size, 80u);
  EXPECT_EQ(result.test_size, 20u);
  EXPECT_EQ(result.report.decision_rule, "nearest_centroid");
  EXPECT_GT(result.report.train_seconds, 0.0);
}

TEST(Experiment, JitterAugmentationGrowsTrainPartition) {
  auto f = testing::cluster_fixture(3, 10, 8, 1.0, 4.5, 3);
  StoreEmbedder embedder(f.store);
  auto cfg = quick_config(2);
  cfg.augmentation.mode = AugmentMode::kEmbeddingJitter;
  cfg.augmentation.target_total = 48;
  auto result = run_experiment(f.dataset, embedder, cfg);
  EXPECT_EQ(result.train_size, 48u);
  EXPECT_EQ(result.test_size, 6u);
}

TEST(Experiment, TokenMutationUsesProvider) {
  auto d = testing::flakycat_fixture();
  HashingProvider provider(64);
  ProviderEmbedder embedder(provider);
  auto cfg = quick_config(0);
  cfg.train.epochs = 2;
  cfg.augmentation.mode = AugmentMode::kTokenMutation;
  auto result = run_experiment(d, embedder, cfg);
  // 295 train tests scaled by 639/369.
  EXPECT_EQ(result.train_size, 511u);
  EXPECT_EQ(result.test_size, 74u);
}

TEST(Experiment, PerProjectReportsEachProject) {
  auto d = testing::flakycat_fixture();
  HashingProvider provider(32);
  ProviderEmbedder embedder(provider);
  auto cfg = quick_config(0);
  cfg.train.epochs = 2;
  cfg.per_project = true;
  cfg.split.group_by_project = true;
  auto result = run_experiment(d, embedder, cfg);
  ASSERT_EQ(result.projects.size(), 3u);
  std::size_t support = 0;
  double weighted = 0.0;
  for (const auto& p : result.projects) {
    support += p.report.total_support();
    weighted += p.report.weighted_avg_f1 * double(p.report.total_support());
  }
  EXPECT_EQ(result.total.support, support);
  EXPECT_NEAR(result.total.weighted_avg_f1, weighted / double(support), 1e-12);
  EXPECT_EQ(result.report.total_support(), support);
}

TEST(Experiment, MissingEmbeddingIsStageTagged) {
  auto f = testing::cluster_fixture(2, 5, 4, 1.0, 4.0, 1);
  EmbeddingStore partial;
  partial.insert(f.dataset.tests()[0].id, f.store.at(f.dataset.tests()[0].id));
  StoreEmbedder embedder(partial);
  try {
    run_experiment(f.dataset, embedder, quick_config(0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmbed);
    EXPECT_EQ(e.stage(), "embed");
  }
}

}  // namespace
}  // namespace flakysieve
