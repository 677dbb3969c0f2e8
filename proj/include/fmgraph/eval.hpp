#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "fmgraph/error.hpp"
#include "fmgraph/graph.hpp"
#include "fmgraph/random.hpp"
#include "fmgraph/solver.hpp"

namespace fmgraph {

/// sqrt(||(X - M) .* S||_F^2 / sum(S)). Entries outside the mask are never read.
inline double rmse_masked(const Matrix& X, const Matrix& M, const Matrix& S) {
  if (X.rows() != M.rows() || X.cols() != M.cols() || X.rows() != S.rows() || X.cols() != S.cols()) {
    throw DimensionMismatch("rmse_masked: X, M and S must share a shape");
  }
  double sum = 0.0;
  double count = 0.0;
  for (Index j = 0; j < X.cols(); ++j) {
    for (Index i = 0; i < X.rows(); ++i) {
      if (S(i, j) == 0.0) continue;
      const double d = X(i, j) - M(i, j);
      sum += S(i, j) * d * d;
      count += S(i, j);
    }
  }
  if (count == 0.0) throw InvalidArgument("rmse_masked: mask has no entries");
  return std::sqrt(sum / count);
}

struct ClusteringResult {
  std::vector<int> assignments;
  double inertia = 0.0;
  Matrix centroids;
  /// Inertia after every Lloyd iteration; non-increasing.
  std::vector<double> inertia_history;
};

struct KMeansRuns {
  std::vector<ClusteringResult> restarts;
  std::size_t best = 0;

  const ClusteringResult& best_result() const { return restarts.at(best); }
};

namespace detail {

inline ClusteringResult lloyd(const RowMatrix& data, int k, std::mt19937_64& rng, int max_iters) {
  const Index n = data.rows();
  RowMatrix centroids(k, data.cols());

  // k-means++ seeding.
  std::uniform_int_distribution<Index> first(0, n - 1);
  centroids.row(0) = data.row(first(rng));
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      auto& di = d2[static_cast<std::size_t>(i)];
      di = std::min(di, (data.row(i) - centroids.row(c - 1)).squaredNorm());
      total += di;
    }
    Index pick = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      pick = n - 1;
      for (Index i = 0; i < n; ++i) {
        target -= d2[static_cast<std::size_t>(i)];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    centroids.row(c) = data.row(pick);
  }

  ClusteringResult res;
  res.assignments.assign(static_cast<std::size_t>(n), -1);
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (data.row(i) - centroids.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (data.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      dist[static_cast<std::size_t>(i)] = best_d;
      if (res.assignments[static_cast<std::size_t>(i)] != best) {
        res.assignments[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    // An empty cluster takes the point farthest from its centroid.
    std::vector<Index> sizes(static_cast<std::size_t>(k), 0);
    for (int a : res.assignments) ++sizes[static_cast<std::size_t>(a)];
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) continue;
      Index far = -1;
      for (Index i = 0; i < n; ++i) {
        if (sizes[static_cast<std::size_t>(res.assignments[static_cast<std::size_t>(i)])] < 2) continue;
        if (far < 0 || dist[static_cast<std::size_t>(i)] > dist[static_cast<std::size_t>(far)]) far = i;
      }
      if (far < 0) break;
      --sizes[static_cast<std::size_t>(res.assignments[static_cast<std::size_t>(far)])];
      res.assignments[static_cast<std::size_t>(far)] = c;
      sizes[static_cast<std::size_t>(c)] = 1;
      dist[static_cast<std::size_t>(far)] = 0.0;
      changed = true;
    }
    if (!changed && it > 0) break;

    centroids.setZero();
    for (Index i = 0; i < n; ++i) centroids.row(res.assignments[static_cast<std::size_t>(i)]) += data.row(i);
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) centroids.row(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);
    }
    double inertia = 0.0;
    for (Index i = 0; i < n; ++i) {
      inertia += (data.row(i) - centroids.row(res.assignments[static_cast<std::size_t>(i)])).squaredNorm();
    }
    res.inertia_history.push_back(inertia);
  }
  res.inertia = res.inertia_history.back();
  res.centroids = centroids;
  return res;
}

}  // namespace detail

/**
 * Lloyd's algorithm with k-means++ seeding, `n_restarts` times. Restart r is
 * seeded from (seed, r). Each restart stops when assignments no longer change
 * or after `max_iters` iterations; `best` indexes the lowest inertia.
 */
inline KMeansRuns kmeans(const Matrix& data, int k_clusters, int n_restarts = 10, std::uint64_t seed = 0,
                         int max_iters = 300) {
  if (k_clusters < 1) throw InvalidArgument("kmeans: k_clusters must be positive");
  if (n_restarts < 1) throw InvalidArgument("kmeans: need at least one restart");
  if (max_iters < 1) throw InvalidArgument("kmeans: max_iters must be positive");
  if (data.rows() < k_clusters) {
    throw SizeError("kmeans: k_clusters = " + std::to_string(k_clusters) + " exceeds " +
                    std::to_string(data.rows()) + " points");
  }
  if (!data.allFinite()) throw InvalidArgument("kmeans: data contains non-finite entries");
  const RowMatrix rows = data;
  KMeansRuns runs;
  for (int r = 0; r < n_restarts; ++r) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    runs.restarts.push_back(detail::lloyd(rows, k_clusters, rng, max_iters));
    if (runs.restarts.back().inertia < runs.restarts[runs.best].inertia) runs.best = runs.restarts.size() - 1;
  }
  return runs;
}

/// Fraction of points whose cluster's majority class equals their label.
inline double clustering_purity(const std::vector<int>& assignments, const std::vector<int>& labels) {
  if (assignments.size() != labels.size()) {
    throw DimensionMismatch("clustering_purity: " + std::to_string(assignments.size()) + " assignments vs " +
                            std::to_string(labels.size()) + " labels");
  }
  if (assignments.empty()) throw InvalidArgument("clustering_purity: no points");
  std::map<int, std::map<int, long>> counts;
  for (std::size_t i = 0; i < labels.size(); ++i) ++counts[assignments[i]][labels[i]];
  long correct = 0;
  for (const auto& [cluster, by_class] : counts) {
    long best = 0;
    for (const auto& [cls, c] : by_class) best = std::max(best, c);
    correct += best;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

struct PurityStats {
  double max = 0.0;
  double mean = 0.0;
  std::vector<double> per_restart;
};

/// Runs k-means `n_restarts` times and reports the maximum (and mean) purity.
inline PurityStats purity_protocol(const Matrix& representation, const std::vector<int>& labels, int k_clusters,
                                   std::uint64_t seed, int n_restarts = 10) {
  if (static_cast<std::size_t>(representation.rows()) != labels.size()) {
    throw DimensionMismatch("purity_protocol: representation has " + std::to_string(representation.rows()) +
                            " rows but there are " + std::to_string(labels.size()) + " labels");
  }
  const KMeansRuns runs = kmeans(representation, k_clusters, n_restarts, seed);
  PurityStats s;
  for (const auto& r : runs.restarts) s.per_restart.push_back(clustering_purity(r.assignments, labels));
  s.max = *std::max_element(s.per_restart.begin(), s.per_restart.end());
  s.mean = std::accumulate(s.per_restart.begin(), s.per_restart.end(), 0.0) /
           static_cast<double>(s.per_restart.size());
  return s;
}

struct KnnResult {
  std::vector<int> predictions;
  /// NaN when no test labels were given.
  double accuracy = std::nan("");
};

/**
 * Majority vote among the K nearest training rows (Euclidean, ties in
 * distance by index). Vote ties go to the label with the smallest summed
 * distance, then to the smallest label.
 */
inline KnnResult knn_classify(const Matrix& train_X, const std::vector<int>& train_y, const Matrix& test_X, int K,
                              const std::vector<int>* test_y = nullptr) {
  if (train_X.rows() == 0) throw InvalidArgument("knn_classify: empty training set");
  if (static_cast<std::size_t>(train_X.rows()) != train_y.size()) {
    throw DimensionMismatch("knn_classify: training labels do not match training rows");
  }
  if (train_X.cols() != test_X.cols()) throw DimensionMismatch("knn_classify: feature counts differ");
  if (K < 1 || K > train_X.rows()) {
    throw SizeError("knn_classify: K = " + std::to_string(K) + " must be in [1, " +
                    std::to_string(train_X.rows()) + "]");
  }
  if (test_y && static_cast<std::size_t>(test_X.rows()) != test_y->size()) {
    throw DimensionMismatch("knn_classify: test labels do not match test rows");
  }
  const RowMatrix tr = train_X;
  const RowMatrix te = test_X;
  KnnResult out;
  std::vector<std::pair<double, Index>> cand(static_cast<std::size_t>(tr.rows()));
  for (Index q = 0; q < te.rows(); ++q) {
    for (Index i = 0; i < tr.rows(); ++i) cand[static_cast<std::size_t>(i)] = {(tr.row(i) - te.row(q)).norm(), i};
    std::partial_sort(cand.begin(), cand.begin() + K, cand.end());
    std::map<int, std::pair<int, double>> votes;  // label -> (count, summed distance)
    for (int t = 0; t < K; ++t) {
      auto& v = votes[train_y[static_cast<std::size_t>(cand[static_cast<std::size_t>(t)].second)]];
      ++v.first;
      v.second += cand[static_cast<std::size_t>(t)].first;
    }
    auto best = votes.begin();
    for (auto it = votes.begin(); it != votes.end(); ++it) {
      const auto& [count, dsum] = it->second;
      if (count > best->second.first || (count == best->second.first && dsum < best->second.second)) best = it;
    }
    out.predictions.push_back(best->first);
  }
  if (test_y) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < out.predictions.size(); ++i) hit += out.predictions[i] == (*test_y)[i];
    out.accuracy = out.predictions.empty() ? std::nan("")
                                           : static_cast<double>(hit) / static_cast<double>(out.predictions.size());
  }
  return out;
}

}  // namespace fmgraph
