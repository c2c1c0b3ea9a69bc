#include "sosr/detector.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "sosr/clustering.hpp"

namespace {

using sosr::ClusterState;

ClusterState centroids_1d(const std::vector<double>& values) {
  ClusterState state;
  for (double v : values) state.add_cluster({v}, 1);
  return state;
}

TEST(PseudoProbabilities, InverseSquareDistanceWeights) {
  // distances 1 and 2: weights 1 and 1/4 normalize to (0.8, 0.2)
  const ClusterState state = centroids_1d({0.0, 3.0});
  const auto p =
      sosr::pseudo_probabilities(std::vector<double>{1.0}, state);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_DOUBLE_EQ(p[0], 0.8);
  EXPECT_DOUBLE_EQ(p[1], 0.2);
}

TEST(PseudoProbabilities, SumToOne) {
  const ClusterState state = centroids_1d({-2.0, 0.5, 3.0, 7.0});
  for (double x : {-5.0, -0.3, 1.7, 4.0, 100.0}) {
    const auto p = sosr::pseudo_probabilities(std::vector<double>{x}, state);
    double total = 0.0;
    for (double v : p) total += v;
    EXPECT_NEAR(total, 1.0, 1e-12) << "x = " << x;
  }
}

TEST(PseudoProbabilities, CoincidentCentroidTakesAllMass) {
  const ClusterState state = centroids_1d({0.0, 3.0});
  const auto p =
      sosr::pseudo_probabilities(std::vector<double>{0.0}, state);
  EXPECT_DOUBLE_EQ(p[0], 1.0);
  EXPECT_DOUBLE_EQ(p[1], 0.0);
}

TEST(PseudoProbabilities, MassSplitsOverSeveralCoincidentCentroids) {
  const ClusterState state = centroids_1d({2.0, 2.0, 5.0});
  const auto p =
      sosr::pseudo_probabilities(std::vector<double>{2.0}, state);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
  EXPECT_DOUBLE_EQ(p[2], 0.0);
}

TEST(PseudoProbabilities, NoClustersThrows) {
  ClusterState state;
  EXPECT_THROW(sosr::pseudo_probabilities(std::vector<double>{0.0}, state),
               std::invalid_argument);
}

TEST(Entropy, HandComputedTwoClusterValue) {
  // H_2(0.8, 0.2) = -(0.8 lg 0.8 + 0.2 lg 0.2)
  const double h = sosr::entropy(std::vector<double>{0.8, 0.2});
  EXPECT_NEAR(h, 0.72192809488736231, 1e-12);
}

TEST(Entropy, UniformIsExactlyOne) {
  for (std::size_t m = 2; m <= 32; ++m) {
    const std::vector<double> p(m, 1.0 / static_cast<double>(m));
    EXPECT_NEAR(sosr::entropy(p), 1.0, 1e-12) << "M = " << m;
  }
}

TEST(Entropy, OneHotIsZero) {
  for (std::size_t m = 2; m <= 8; ++m) {
    std::vector<double> p(m, 0.0);
    p[m / 2] = 1.0;
    EXPECT_DOUBLE_EQ(sosr::entropy(p), 0.0) << "M = " << m;
  }
}

TEST(Entropy, BaseMNormalizationIsScaleFree) {
  // the same two-way split padded with zeros keeps its base-2 entropy
  // scaled by lg(M): H_M = H_2 / log2(M)
  const double h2 = sosr::entropy(std::vector<double>{0.7, 0.3});
  const double h4 =
      sosr::entropy(std::vector<double>{0.7, 0.3, 0.0, 0.0});
  EXPECT_NEAR(h4, h2 / 2.0, 1e-12);
}

TEST(Entropy, FewerThanTwoClustersThrows) {
  EXPECT_THROW(sosr::entropy(std::vector<double>{1.0}),
               std::invalid_argument);
  EXPECT_THROW(sosr::entropy(std::vector<double>{}), std::invalid_argument);
}

TEST(IsUnknown, BoundaryBelongsToUnknown) {
  EXPECT_TRUE(sosr::is_unknown(0.8, 0.8));
  EXPECT_TRUE(sosr::is_unknown(0.81, 0.8));
  EXPECT_FALSE(sosr::is_unknown(0.79, 0.8));
}

TEST(ScoreNovelty, ComposesProbabilitiesAndEntropy) {
  const ClusterState state = centroids_1d({0.0, 3.0});
  const auto score = sosr::score_novelty(std::vector<double>{1.0}, state);
  EXPECT_DOUBLE_EQ(score.pseudo_probs[0], 0.8);
  EXPECT_DOUBLE_EQ(score.pseudo_probs[1], 0.2);
  EXPECT_NEAR(score.entropy, 0.72192809488736231, 1e-12);
}

TEST(ScoreNovelty, MidpointMaximizesEntropy) {
  const ClusterState state = centroids_1d({0.0, 10.0});
  const double mid =
      sosr::score_novelty(std::vector<double>{5.0}, state).entropy;
  const double near0 =
      sosr::score_novelty(std::vector<double>{1.0}, state).entropy;
  EXPECT_NEAR(mid, 1.0, 1e-12);  // equidistant -> uniform membership
  EXPECT_LT(near0, mid);
}

}  // namespace
