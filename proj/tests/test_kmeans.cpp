#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fasc/kmeans.hpp"
#include "oracles.hpp"

using namespace fasc;
using oracle::random_matrix;

namespace {

/// Four tight blobs far apart, so the optimal partition is unambiguous.
Eigen::MatrixXd blobs(int per_blob, std::uint64_t seed) {
  const Eigen::MatrixXd noise = 0.1 * random_matrix(4 * per_blob, 2, seed);
  Eigen::MatrixXd x(4 * per_blob, 2);
  const double cx[] = {0, 20, 0, 20}, cy[] = {0, 0, 20, 20};
  for (int b = 0; b < 4; ++b)
    for (int i = 0; i < per_blob; ++i)
      x.row(b * per_blob + i) = Eigen::RowVector2d(cx[b], cy[b]) + noise.row(b * per_blob + i);
  return x;
}

}  // namespace

TEST(Config, Validation) {
  EXPECT_THROW(kmeans(random_matrix(5, 2, 1), KMeansConfig{2, 0}), ValidationError);
  EXPECT_THROW(kmeans(random_matrix(5, 2, 1), KMeansConfig{2, 1, 0}), ValidationError);
  EXPECT_THROW(kmeans(random_matrix(5, 2, 1), KMeansConfig{2, 1, 10, -1.0}), ValidationError);
  EXPECT_THROW(kmeans(random_matrix(2, 2, 1), KMeansConfig{3}), ValidationError);
  Eigen::MatrixXd bad = random_matrix(5, 2, 1);
  bad(2, 1) = std::nan("");
  EXPECT_THROW(kmeans(bad, KMeansConfig{2}), ValidationError);
}

TEST(KMeans, TwoPointsOnALine) {
  Eigen::MatrixXd x(2, 1);
  x << 0, 10;
  const KMeansResult r = kmeans(x, KMeansConfig{2});
  EXPECT_EQ(r.objective, 0.0);
  EXPECT_EQ(r.centers(0, 0), 0.0);
  EXPECT_EQ(r.centers(1, 0), 10.0);
}

TEST(KMeans, SingleClusterIsTheMean) {
  const Eigen::MatrixXd x = random_matrix(30, 3, 4);
  const KMeansResult r = kmeans(x, KMeansConfig{1});
  const Eigen::RowVectorXd mean = x.colwise().mean();
  EXPECT_LE((r.centers.row(0) - mean).norm(), 1e-12);
  EXPECT_NEAR(r.objective, (x.rowwise() - mean).squaredNorm(), 1e-9);
}

TEST(KMeans, GlobalOptimumOnSmallInstances) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Eigen::MatrixXd x = random_matrix(7, 2, seed);
    const double best = oracle::kmeans_brute_force(x, 2);
    const KMeansResult r = kmeans(x, KMeansConfig{2, 10, 300, 1e-8, seed});
    EXPECT_NEAR(r.objective, best, 1e-9 * std::max(1.0, best)) << "seed " << seed;
  }
}

TEST(KMeans, ResultIsSelfConsistent) {
  const Eigen::MatrixXd x = random_matrix(60, 4, 12);
  const KMeansResult r = kmeans(x, KMeansConfig{4, 5, 300, 1e-8, 3});
  double obj = 0.0;
  for (int i = 0; i < 60; ++i) {
    obj += (x.row(i) - r.centers.row(r.labels[i])).squaredNorm();
    double nearest = std::numeric_limits<double>::infinity();
    for (int j = 0; j < 4; ++j) nearest = std::min(nearest, (x.row(i) - r.centers.row(j)).squaredNorm());
    EXPECT_EQ((x.row(i) - r.centers.row(r.labels[i])).squaredNorm(), nearest);
  }
  EXPECT_NEAR(r.objective, obj, 1e-9 * obj);
  EXPECT_GE(r.restart_index, 0);
  EXPECT_LT(r.restart_index, 5);
}

TEST(KMeans, Deterministic) {
  const Eigen::MatrixXd x = random_matrix(80, 3, 2);
  const KMeansConfig cfg{3, 4, 300, 1e-8, 77};
  const KMeansResult a = kmeans(x, cfg), b = kmeans(x, cfg);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.centers, b.centers);
  EXPECT_EQ(a.objective, b.objective);
}

TEST(Assign, TiesGoToTheLowestIndex) {
  Eigen::MatrixXd centers(3, 1);
  centers << -1, 1, 5;
  Eigen::MatrixXd points(2, 1);
  points << 0, 5;
  EXPECT_EQ(assign(points, centers), (Labels{0, 2}));
  EXPECT_THROW(assign(points, Eigen::MatrixXd::Zero(2, 2)), ValidationError);
}

TEST(Assign, MatchesNaiveScan) {
  const Eigen::MatrixXd points = random_matrix(20, 3, 5), centers = random_matrix(3, 3, 6);
  const Labels got = assign(points, centers);
  for (int i = 0; i < 20; ++i) {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int j = 0; j < 3; ++j) {
      double dist = 0.0;
      for (int c = 0; c < 3; ++c) dist += (points(i, c) - centers(j, c)) * (points(i, c) - centers(j, c));
      if (dist < bd) {
        bd = dist;
        best = j;
      }
    }
    EXPECT_EQ(got[i], best);
  }
}

TEST(Lloyd, ObjectiveNeverIncreases) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Eigen::MatrixXd x = random_matrix(100, 3, seed);
    Rng rng(seed);
    const KMeansResult r = lloyd(x, kmeanspp_init(x, 5, rng), 300, 0.0);
    ASSERT_GE(r.history.size(), 1u);
    for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i], r.history[i - 1] + 1e-12);
    EXPECT_NEAR(r.history.back(), r.objective, 1e-9 * r.objective);
  }
}

TEST(Lloyd, EmptyClusterIsReseeded) {
  Eigen::MatrixXd x(4, 1);
  x << 0, 1, 10, 11;
  Eigen::MatrixXd centers(3, 1);
  centers << 0.5, 10.5, 1000;  // third center attracts nothing
  const KMeansResult r = lloyd(x, centers, 100, 1e-8);
  std::vector<int> counts(3, 0);
  for (int l : r.labels) ++counts[l];
  for (int c : counts) EXPECT_GE(c, 1);
}

TEST(KMeans, MoreRestartsNeverHurt) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Eigen::MatrixXd x = random_matrix(50, 2, seed + 30);
    double prev = std::numeric_limits<double>::infinity();
    for (int restarts : {1, 2, 5, 10}) {
      const KMeansResult r = kmeans(x, KMeansConfig{4, restarts, 300, 1e-8, seed});
      EXPECT_LE(r.objective, prev);
      prev = r.objective;
    }
  }
}

TEST(KMeans, ScalingPreservesLabels) {
  const Eigen::MatrixXd x = random_matrix(40, 3, 8);
  const KMeansConfig cfg{3, 5, 300, 1e-8, 1};
  const KMeansResult a = kmeans(x, cfg), b = kmeans(2.0 * x, cfg);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NEAR(b.objective, 4.0 * a.objective, 1e-9 * b.objective);
}

TEST(KMeans, RowPermutationEquivariance) {
  const Eigen::MatrixXd x = blobs(15, 3);
  std::vector<int> perm(x.rows());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(4);
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  Eigen::MatrixXd px(x.rows(), x.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) px.row(i) = x.row(perm[i]);

  const KMeansConfig cfg{4, 10, 300, 1e-8, 9};
  const KMeansResult a = kmeans(x, cfg), b = kmeans(px, cfg);
  for (std::size_t i = 0; i < perm.size(); ++i) EXPECT_EQ(b.labels[i], a.labels[perm[i]]);
  EXPECT_NEAR(a.objective, b.objective, 1e-9 * a.objective);
}
