#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "flakysieve/error.hpp"
#include "flakysieve/rng.hpp"
#include "flakysieve/siamese.hpp"
#include "oracles.hpp"

namespace flakysieve {
namespace {

SiameseModel scalar_model(float w, float b) {
  return SiameseModel({DenseLayer{1, 1, {w}, {b}, Activation::kIdentity}});
}

std::vector<double> widen(std::span<const float> v) { return {v.begin(), v.end()}; }

TEST(Model, ParameterCount) {
  const std::size_t hidden[] = {3};
  auto m = init_model(4, hidden, 2, 0);
  EXPECT_EQ(m.parameter_count(), 4u * 3 + 3 + 3 * 2 + 2);
  EXPECT_EQ(m.parameter_count(), 23u);
  EXPECT_EQ(m.layers()[0].activation, Activation::kRelu);
  EXPECT_EQ(m.layers()[1].activation, Activation::kIdentity);
}

TEST(Model, NoHiddenLayersIsOneLinearMap) {
  auto m = init_model(5, {}, 3, 1);
  ASSERT_EQ(m.layers().size(), 1u);
  EXPECT_EQ(m.layers()[0].in_dim, 5u);
  EXPECT_EQ(m.layers()[0].out_dim, 3u);
  EXPECT_EQ(m.layers()[0].activation, Activation::kIdentity);
}

TEST(Model, SameSeedSameParameters) {
  const std::size_t hidden[] = {16, 8};
  EXPECT_EQ(init_model(10, hidden, 4, 5), init_model(10, hidden, 4, 5));
  EXPECT_NE(init_model(10, hidden, 4, 5), init_model(10, hidden, 4, 6));
}

TEST(Model, InitWithinGlorotBound) {
  const std::size_t hidden[] = {30};
  auto m = init_model(20, hidden, 10, 2);
  const double bound = std::sqrt(6.0 / (20 + 30));
  for (float w : m.layers()[0].weights) EXPECT_LE(std::abs(w), bound);
  for (float b : m.layers()[0].bias) EXPECT_EQ(b, 0.0f);
}

TEST(Model, InvalidShapes) {
  const std::size_t zero[] = {0};
  EXPECT_THROW(init_model(0, {}, 2, 0), ConfigError);
  EXPECT_THROW(init_model(3, {}, 0, 0), ConfigError);
  EXPECT_THROW(init_model(3, zero, 2, 0), ConfigError);
  EXPECT_THROW(SiameseModel({DenseLayer{2, 1, {1.0f}, {0.0f}, Activation::kIdentity}}),
               ConfigError);
}

TEST(Forward, IdentityLayer) {
  SiameseModel m({DenseLayer{3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0},
                             Activation::kIdentity}});
  const float x[] = {1.5f, -2.0f, 7.25f};
  EXPECT_EQ(forward(m, x), (EmbeddingVector{1.5f, -2.0f, 7.25f}));
}

TEST(Forward, HandEvaluatedReluNet) {
  SiameseModel m({DenseLayer{2, 1, {1.0f, -1.0f}, {0.0f}, Activation::kRelu},
                  DenseLayer{1, 1, {2.0f}, {0.0f}, Activation::kIdentity}});
  const float x[] = {3.0f, 1.0f};
  EXPECT_EQ(forward(m, x), (EmbeddingVector{4.0f}));
  const float neg[] = {1.0f, 3.0f};
  EXPECT_EQ(forward(m, neg), (EmbeddingVector{0.0f}));
}

TEST(Forward, WrongLengthIsShapeError) {
  auto m = init_model(4, {}, 2, 0);
  const float x[] = {1.0f, 2.0f};
  EXPECT_THROW(forward(m, x), ShapeError);
}

TEST(Forward, MatchesNaiveOracle) {
  const std::size_t hidden[] = {7, 5};
  auto m = init_model(6, hidden, 3, 9);
  testing::NaiveNet net(m);
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<float> x(6);
    for (auto& v : x) v = static_cast<float>(rng.normal());
    auto got = forward_exact(m, x);
    auto want = net.run(widen(x));
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(TripletLoss, SatisfiedMargin) {
  const float a[] = {0, 0}, p[] = {0, 0}, n[] = {3, 4};
  EXPECT_EQ(triplet_loss(std::span<const float>(a), p, n, 1.0), 0.0);
}

TEST(TripletLoss, CollapseEqualsMargin) {
  const float x[] = {1.5f, -2.0f};
  EXPECT_EQ(triplet_loss(std::span<const float>(x), x, x, 0.7), 0.7);
}

TEST(TripletLoss, HandValue) {
  const float a[] = {0}, p[] = {2}, n[] = {1};
  EXPECT_EQ(triplet_loss(std::span<const float>(a), p, n, 0.5), 3.5);
}

TEST(TripletLoss, DimensionMismatch) {
  const float a[] = {0, 1}, p[] = {2}, n[] = {1};
  EXPECT_THROW(triplet_loss(std::span<const float>(a), p, n, 0.5), ShapeError);
}

TEST(Backward, InactiveHingeGivesZeroGradients) {
  auto m = scalar_model(1.0f, 0.0f);
  const float a[] = {0}, p[] = {0.1f}, n[] = {5};
  auto g = backward(m, a, p, n, 1.0);
  EXPECT_EQ(g.loss, 0.0);
  EXPECT_TRUE(g.gradients.all_zero());
}

TEST(Backward, ScalarLinearExample) {
  // L = (2w)^2 - w^2 + 0.5 so dL/dw = 6w and dL/db = 0.
  auto m = scalar_model(1.0f, 0.0f);
  const float a[] = {0}, p[] = {2}, n[] = {1};
  auto g = backward(m, a, p, n, 0.5);
  EXPECT_EQ(g.loss, 3.5);
  EXPECT_DOUBLE_EQ(g.gradients.layers[0].weights[0], 6.0);
  EXPECT_DOUBLE_EQ(g.gradients.layers[0].bias[0], 0.0);
  auto fd = testing::finite_difference(m, {0}, {2}, {1}, 0.5, 1e-5);
  EXPECT_LT(testing::max_relative_error(g.gradients, fd, 1e-6), 1e-6)
      << fd.layers[0].weights[0] << " " << fd.layers[0].bias[0];
}

TEST(Backward, MultiLayerMatchesFiniteDifferences) {
  const std::size_t hidden[] = {6, 4};
  auto m = init_model(5, hidden, 3, 21);
  testing::NaiveNet net(m);
  Rng rng(4);
  int checked = 0;
  while (checked < 5) {
    std::vector<float> a(5), p(5), n(5);
    for (auto* v : {&a, &p, &n}) {
      for (auto& x : *v) x = static_cast<float>(rng.normal());
    }
    const double margin = 2.0;
    if (net.loss(widen(a), widen(p), widen(n), margin) < 1e-3) continue;
    double kink = INFINITY;
    for (auto* v : {&a, &p, &n}) kink = std::min(kink, net.min_relu_margin(widen(*v)));
    if (kink < 1e-3) continue;
    auto g = backward(m, a, p, n, margin);
    auto fd = testing::finite_difference(m, widen(a), widen(p), widen(n), margin, 1e-6);
    EXPECT_LT(testing::max_relative_error(g.gradients, fd, 1e-3), 1e-4);
    ++checked;
  }
}

TEST(Backward, WorkspaceAccumulatesSum) {
  const std::size_t hidden[] = {4};
  auto m = init_model(3, hidden, 2, 3);
  const float a[] = {1, 0, 0}, p[] = {0, 1, 0}, n[] = {0.9f, 0.1f, 0};
  auto once = backward(m, a, p, n, 5.0);
  GradientWorkspace ws(m);
  auto acc = Gradients::zeros_like(m);
  ws.accumulate(m, a, p, n, 5.0, acc);
  const double loss = ws.accumulate(m, a, p, n, 5.0, acc);
  EXPECT_EQ(loss, once.loss);
  for (std::size_t l = 0; l < acc.layers.size(); ++l) {
    for (std::size_t i = 0; i < acc.layers[l].weights.size(); ++i) {
      EXPECT_DOUBLE_EQ(acc.layers[l].weights[i], 2.0 * once.gradients.layers[l].weights[i]);
    }
  }
}

TEST(Sampling, ThreeLabelsTwoClasses) {
  const std::size_t classes[] = {0, 0, 1};
  Rng rng(8);
  auto triplets = sample_triplets(classes, 4, rng);
  ASSERT_EQ(triplets.size(), 4u);
  for (const auto& t : triplets) {
    EXPECT_LT(t.anchor, 2u);
    EXPECT_EQ(t.positive, 1 - t.anchor);
    EXPECT_EQ(t.negative, 2u);
  }
}

TEST(Sampling, SingleClassRejected) {
  const std::size_t classes[] = {0, 0, 0};
  Rng rng(0);
  EXPECT_THROW(sample_triplets(classes, 3, rng), SampleError);
  const std::size_t singletons[] = {0, 1, 2};
  EXPECT_THROW(sample_triplets(singletons, 3, rng), SampleError);
}

TEST(Sampling, SingletonClassNeverAnchors) {
  const std::size_t classes[] = {0, 0, 0, 1};
  Rng rng(2);
  for (const auto& t : sample_triplets(classes, 200, rng)) {
    EXPECT_NE(t.anchor, 3u);
    EXPECT_NE(t.positive, 3u);
    EXPECT_NE(t.positive, t.anchor);
    EXPECT_EQ(t.negative, 3u);
  }
}

TEST(Sampling, FixedSeedFixedTriplets) {
  const std::size_t classes[] = {0, 1, 2, 0, 1, 2, 0};
  Rng x(17);
  Rng y(17);
  EXPECT_EQ(sample_triplets(classes, 50, x), sample_triplets(classes, 50, y));
}

TEST(Sampling, ValidityOverManyDraws) {
  const std::size_t classes[] = {0, 1, 2, 0, 1, 2, 0, 3};
  Rng rng(5);
  std::set<std::size_t> anchors;
  for (const auto& t : sample_triplets(classes, 1000, rng)) {
    EXPECT_EQ(classes[t.anchor], classes[t.positive]);
    EXPECT_NE(t.anchor, t.positive);
    EXPECT_NE(classes[t.anchor], classes[t.negative]);
    anchors.insert(t.anchor);
  }
  EXPECT_EQ(anchors.size(), 7u);
}

}  // namespace
}  // namespace flakysieve
