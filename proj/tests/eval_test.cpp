#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fmgraph/eval.hpp"
#include "oracles.hpp"

using namespace fmgraph;

namespace {

/// Well-separated isotropic blobs; label i / per_blob.
Matrix blobs(int n_blobs, int per_blob, int dim, double spread, std::uint64_t seed, std::vector<int>* labels) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix x(n_blobs * per_blob, dim);
  labels->clear();
  for (int b = 0; b < n_blobs; ++b) {
    for (int p = 0; p < per_blob; ++p) {
      const int i = b * per_blob + p;
      for (int d = 0; d < dim; ++d) x(i, d) = (d == b % dim ? 10.0 * (1 + b / dim) : 0.0) + spread * normal(rng);
      labels->push_back(b);
    }
  }
  return x;
}

}  // namespace

TEST(Eval, RmsePerfectAndHandComputed) {
  const Matrix M = Matrix::Random(4, 5);
  EXPECT_EQ(rmse_masked(M, M, Matrix::Ones(4, 5)), 0.0);
  Matrix X = Matrix::Zero(2, 2), Y = Matrix::Zero(2, 2), S = Matrix::Zero(2, 2);
  X(0, 0) = 3.0;
  X(1, 1) = 4.0;
  S(0, 0) = 1.0;
  S(1, 1) = 1.0;
  EXPECT_DOUBLE_EQ(rmse_masked(X, Y, S), std::sqrt(12.5));
}

TEST(Eval, RmseIgnoresEntriesOutsideMask) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix X = Matrix::Zero(6, 7), M = Matrix::Zero(6, 7), S = Matrix::Zero(6, 7);
  for (Index j = 0; j < 7; ++j) {
    for (Index i = 0; i < 6; ++i) {
      X(i, j) = u(rng);
      M(i, j) = u(rng);
      S(i, j) = u(rng) > 0.0 ? 1.0 : 0.0;
    }
  }
  S(0, 0) = 1.0;
  const double base = rmse_masked(X, M, S);
  Matrix X2 = X, M2 = M;
  for (Index j = 0; j < 7; ++j) {
    for (Index i = 0; i < 6; ++i) {
      if (S(i, j) == 0.0) {
        X2(i, j) = 1e6;
        M2(i, j) = std::nan("");
      }
    }
  }
  EXPECT_EQ(rmse_masked(X2, M2, S), base);
}

TEST(Eval, RmseErrors) {
  EXPECT_THROW(rmse_masked(Matrix::Zero(2, 2), Matrix::Zero(2, 3), Matrix::Ones(2, 2)), DimensionMismatch);
  EXPECT_THROW(rmse_masked(Matrix::Zero(2, 2), Matrix::Zero(2, 2), Matrix::Zero(2, 2)), InvalidArgument);
}

TEST(Eval, PurityHandExamples) {
  EXPECT_DOUBLE_EQ(clustering_purity({0, 0, 1, 1}, {5, 5, 7, 7}), 1.0);
  // Cluster 0 holds {a, a, b}, cluster 1 holds {b}: 3 of 4 match their majority.
  EXPECT_DOUBLE_EQ(clustering_purity({0, 0, 0, 1}, {1, 1, 2, 2}), 0.75);
  EXPECT_DOUBLE_EQ(clustering_purity({0, 0, 0, 0}, {0, 1, 2, 3}), 0.25);
  EXPECT_THROW(clustering_purity({0, 1}, {0}), DimensionMismatch);
  EXPECT_THROW(clustering_purity({}, {}), InvalidArgument);
}

TEST(Eval, PurityBoundsAndPermutationInvariance) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 5 + trial;
    std::uniform_int_distribution<int> c(0, 4), l(0, 3);
    std::vector<int> a(n), y(n);
    for (int i = 0; i < n; ++i) {
      a[i] = c(rng);
      y[i] = l(rng);
    }
    const double p = clustering_purity(a, y);
    EXPECT_GE(p, 1.0 / n);
    EXPECT_LE(p, 1.0);
    std::vector<int> a2 = a, y2 = y;
    for (int& v : a2) v = (v * 3 + 1) % 5;
    for (int& v : y2) v = 10 - v;
    EXPECT_EQ(clustering_purity(a2, y2), p);
  }
}

TEST(Eval, KMeansInertiaNeverIncreases) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Matrix x(120, 3);
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < 3; ++j) x(i, j) = normal(rng);
  }
  const KMeansRuns runs = kmeans(x, 5, 10, 7);
  for (const auto& r : runs.restarts) {
    for (std::size_t t = 1; t < r.inertia_history.size(); ++t) {
      EXPECT_LE(r.inertia_history[t], r.inertia_history[t - 1] + 1e-9);
    }
    EXPECT_EQ(r.inertia, r.inertia_history.back());
  }
  for (const auto& r : runs.restarts) EXPECT_GE(r.inertia, runs.best_result().inertia);
}

TEST(Eval, KMeansInertiaMatchesAssignments) {
  std::vector<int> y;
  const Matrix x = blobs(3, 20, 3, 0.5, 4, &y);
  const KMeansRuns runs = kmeans(x, 3, 5, 1);
  const ClusteringResult& r = runs.best_result();
  double inertia = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    inertia += (x.row(i) - r.centroids.row(r.assignments[static_cast<std::size_t>(i)])).squaredNorm();
  }
  EXPECT_NEAR(inertia, r.inertia, 1e-9 * inertia);
}

TEST(Eval, KMeansErrorsAndDeterminism) {
  EXPECT_THROW(kmeans(Matrix::Zero(3, 2), 4), SizeError);
  EXPECT_THROW(kmeans(Matrix::Zero(3, 2), 0), InvalidArgument);
  std::vector<int> y;
  const Matrix x = blobs(3, 15, 3, 1.0, 5, &y);
  EXPECT_EQ(kmeans(x, 3, 4, 11).best_result().assignments, kmeans(x, 3, 4, 11).best_result().assignments);
}

TEST(Eval, PurityProtocolOnPerfectBlobs) {
  std::vector<int> y;
  const Matrix x = blobs(3, 30, 3, 0.3, 6, &y);
  const PurityStats s = purity_protocol(x, y, 3, 0);
  EXPECT_EQ(s.max, 1.0);
  EXPECT_EQ(s.per_restart.size(), 10u);
  for (double p : s.per_restart) {
    EXPECT_GE(s.max, p);
    EXPECT_LE(s.mean, s.max);
  }
}

TEST(Eval, PurityProtocolReturnsBestRestart) {
  // Overlapping blobs, so restarts disagree; the protocol reports the best
  // restart, not the lowest-inertia one.
  std::vector<int> y;
  const Matrix x = blobs(5, 12, 5, 2.5, 7, &y);
  const PurityStats s = purity_protocol(x, y, 5, 3);
  EXPECT_EQ(s.max, *std::max_element(s.per_restart.begin(), s.per_restart.end()));
  const KMeansRuns runs = kmeans(x, 5, 10, 3);
  for (std::size_t r = 0; r < runs.restarts.size(); ++r) {
    EXPECT_EQ(s.per_restart[r], oracle::purity(runs.restarts[r].assignments, y));
  }
}

TEST(Eval, KnnHandExamples) {
  Matrix tr(3, 2);
  tr << 0, 0, 5, 5, 10, 0;
  const std::vector<int> ty{1, 2, 3};
  Matrix te(1, 2);
  te << 5, 5;
  EXPECT_EQ(knn_classify(tr, ty, te, 1).predictions, std::vector<int>{2});

  // XOR layout: each corner's nearest other corner (distance 1) has the
  // opposite label, the diagonal one (distance sqrt 2) the same label.
  Matrix xor_pts(4, 2);
  xor_pts << 0, 0, 1, 1, 0, 1, 1, 0;
  const std::vector<int> xor_y{0, 0, 1, 1};
  for (int i = 0; i < 4; ++i) {
    Matrix tr3(3, 2), q(1, 2);
    std::vector<int> y3;
    int r = 0;
    for (int j = 0; j < 4; ++j) {
      if (j == i) continue;
      tr3.row(r++) = xor_pts.row(j);
      y3.push_back(xor_y[static_cast<std::size_t>(j)]);
    }
    q.row(0) = xor_pts.row(i);
    const std::vector<int> truth{xor_y[static_cast<std::size_t>(i)]};
    // K=1: tie between two distance-1 neighbors of the same (opposite) label.
    EXPECT_EQ(knn_classify(tr3, y3, q, 1, &truth).accuracy, 0.0);
    // K=3: two opposite labels outvote the one diagonal match.
    EXPECT_EQ(knn_classify(tr3, y3, q, 3, &truth).accuracy, 0.0);
  }
}

TEST(Eval, KnnVoteTieGoesToSmallerSummedDistance) {
  Matrix tr(4, 1);
  tr << 1.0, -1.2, 1.5, -1.1;
  const std::vector<int> ty{7, 3, 7, 3};
  Matrix te(1, 1);
  te << 0.0;
  // Two votes each; label 7 sums to 2.5, label 3 to 2.3.
  EXPECT_EQ(knn_classify(tr, ty, te, 4).predictions.front(), 3);
}

TEST(Eval, KnnUniformLabelsAndErrors) {
  const Matrix tr = Matrix::Random(10, 3);
  const std::vector<int> ty(10, 4);
  const Matrix te = Matrix::Random(6, 3);
  const std::vector<int> tey(6, 4);
  EXPECT_EQ(knn_classify(tr, ty, te, 3, &tey).accuracy, 1.0);
  EXPECT_TRUE(std::isnan(knn_classify(tr, ty, te, 3).accuracy));
  EXPECT_THROW(knn_classify(tr, ty, te, 11), SizeError);
  EXPECT_THROW(knn_classify(tr, ty, Matrix::Zero(2, 2), 1), DimensionMismatch);
}

TEST(Eval, MetricsMatchBruteForceOracles) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Index m = 3 + trial % 6, n = 2 + trial % 5;
    Matrix X(m, n), M(m, n), S(m, n);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < m; ++i) {
        X(i, j) = u(rng);
        M(i, j) = u(rng);
        S(i, j) = u(rng) > -0.2 ? 1.0 : 0.0;
      }
    }
    S(0, 0) = 1.0;
    EXPECT_NEAR(rmse_masked(X, M, S), oracle::masked_rmse(X, M, S), 1e-12);

    const int pts = 8 + trial % 10;
    std::vector<int> a(static_cast<std::size_t>(pts)), y(static_cast<std::size_t>(pts));
    for (int i = 0; i < pts; ++i) {
      a[static_cast<std::size_t>(i)] = static_cast<int>((u(rng) + 1.0) * 2.0);
      y[static_cast<std::size_t>(i)] = static_cast<int>((u(rng) + 1.0) * 1.5);
    }
    EXPECT_NEAR(clustering_purity(a, y), oracle::purity(a, y), 1e-12);

    const Matrix tr = Matrix::Random(pts, 3), te = Matrix::Random(5, 3);
    const int K = 1 + trial % 4;
    EXPECT_EQ(knn_classify(tr, y, te, K).predictions, oracle::knn(tr, y, te, K));
  }
}
