#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fmgraph/error.hpp"

namespace fmgraph {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/**
 * Undirected weighted graph over n nodes.
 *
 * The adjacency is stored sparse. Construction validates the invariants:
 * exact symmetry, zero diagonal, finite nonnegative weights.
 */
class WeightedGraph {
 public:
  WeightedGraph() = default;

  explicit WeightedGraph(SparseMatrix adjacency) : adjacency_(std::move(adjacency)) {
    adjacency_.prune(0.0);
    adjacency_.makeCompressed();
    validate();
  }

  /// Builds from undirected edges; each (i, j, w) sets both (i,j) and (j,i).
  /// Repeated edges keep the largest weight.
  static WeightedGraph from_edges(Index n, const std::vector<Triplet>& edges) {
    if (n < 0) throw InvalidArgument("graph: negative node count");
    std::vector<Triplet> both;
    both.reserve(edges.size() * 2);
    for (const auto& e : edges) {
      if (e.row() < 0 || e.row() >= n || e.col() < 0 || e.col() >= n) {
        throw InvalidArgument("graph: edge (" + std::to_string(e.row()) + ", " +
                              std::to_string(e.col()) + ") out of range for " +
                              std::to_string(n) + " nodes");
      }
      if (e.row() == e.col()) throw InvalidArgument("graph: self-loop at node " +
                                                    std::to_string(e.row()));
      both.emplace_back(e.row(), e.col(), e.value());
      both.emplace_back(e.col(), e.row(), e.value());
    }
    SparseMatrix a(n, n);
    a.setFromTriplets(both.begin(), both.end(),
                      [](double x, double y) { return std::max(x, y); });
    return WeightedGraph(std::move(a));
  }

  Index size() const { return adjacency_.rows(); }
  const SparseMatrix& adjacency() const { return adjacency_; }
  double weight(Index i, Index j) const { return adjacency_.coeff(i, j); }

  /// Number of undirected edges.
  Index edge_count() const { return adjacency_.nonZeros() / 2; }

  /// Weighted degree (row sums of the adjacency).
  Vector degree() const {
    Vector d = Vector::Zero(size());
    for (Index c = 0; c < adjacency_.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(adjacency_, c); it; ++it) d(it.row()) += it.value();
    }
    return d;
  }

  /// Upper-triangle edge list (i < j).
  std::vector<Triplet> edges() const {
    std::vector<Triplet> out;
    out.reserve(static_cast<std::size_t>(edge_count()));
    for (Index c = 0; c < adjacency_.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(adjacency_, c); it; ++it) {
        if (it.row() < it.col()) out.emplace_back(it.row(), it.col(), it.value());
      }
    }
    std::sort(out.begin(), out.end(), [](const Triplet& a, const Triplet& b) {
      return std::pair(a.row(), a.col()) < std::pair(b.row(), b.col());
    });
    return out;
  }

 private:
  void validate() const {
    if (adjacency_.rows() != adjacency_.cols()) throw InvalidArgument("graph: adjacency is not square");
    for (Index c = 0; c < adjacency_.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(adjacency_, c); it; ++it) {
        const double w = it.value();
        if (!std::isfinite(w) || w < 0.0) throw InvalidArgument("graph: weights must be finite and nonnegative");
        if (it.row() == it.col()) throw InvalidArgument("graph: nonzero diagonal entry");
        if (adjacency_.coeff(it.col(), it.row()) != w) throw InvalidArgument("graph: adjacency is not symmetric");
      }
    }
  }

  SparseMatrix adjacency_;
};

/// Unnormalized Laplacian L = D - W.
struct GraphLaplacian {
  SparseMatrix matrix;
  Vector degree;

  Index size() const { return matrix.rows(); }
  Matrix dense() const { return Matrix(matrix); }
};

inline GraphLaplacian laplacian(const WeightedGraph& g) {
  GraphLaplacian out;
  out.degree = g.degree();
  SparseMatrix diag(g.size(), g.size());
  std::vector<Triplet> d;
  d.reserve(static_cast<std::size_t>(g.size()));
  for (Index i = 0; i < g.size(); ++i) {
    if (out.degree(i) != 0.0) d.emplace_back(i, i, out.degree(i));
  }
  diag.setFromTriplets(d.begin(), d.end());
  out.matrix = diag - g.adjacency();
  out.matrix.makeCompressed();
  return out;
}

/// Bandwidth policy for the Gaussian kernel exp(-d^2 / sigma^2).
struct KernelScale {
  /// Unset: sigma is the mean over nodes of the distance to the K-th neighbor.
  std::optional<double> sigma;

  static KernelScale automatic() { return {}; }
  static KernelScale fixed(double s) { return {s}; }
};

namespace detail {

inline void require_finite(const Matrix& data, const char* who) {
  if (!data.allFinite()) throw InvalidArgument(std::string(who) + ": data contains non-finite entries");
}

/// Indices of the K nearest other samples of every row, nearest first,
/// ties broken by index. Also returns the matching distances.
inline std::pair<std::vector<std::vector<Index>>, std::vector<std::vector<double>>>
nearest_neighbors(const Matrix& data, Index K) {
  const Index n = data.rows();
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = data;
  Matrix dist2(n, n);
  for (Index i = 0; i < n; ++i) {
    dist2(i, i) = 0.0;
    for (Index j = i + 1; j < n; ++j) {
      const double d = (rows.row(i) - rows.row(j)).squaredNorm();
      dist2(i, j) = d;
      dist2(j, i) = d;
    }
  }
  std::vector<std::vector<Index>> idx(static_cast<std::size_t>(n));
  std::vector<std::vector<double>> dst(static_cast<std::size_t>(n));
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    order.clear();
    for (Index j = 0; j < n; ++j) {
      if (j != i) order.push_back(j);
    }
    auto closer = [&](Index a, Index b) {
      return dist2(i, a) != dist2(i, b) ? dist2(i, a) < dist2(i, b) : a < b;
    };
    std::partial_sort(order.begin(), order.begin() + K, order.end(), closer);
    auto& out_i = idx[static_cast<std::size_t>(i)];
    auto& out_d = dst[static_cast<std::size_t>(i)];
    out_i.assign(order.begin(), order.begin() + K);
    for (Index j : out_i) out_d.push_back(std::sqrt(dist2(i, j)));
  }
  return {std::move(idx), std::move(dst)};
}

}  // namespace detail

/**
 * Symmetric K-nearest-neighbor graph over the rows of `data`.
 *
 * i-j is an edge when j is among the K nearest neighbors of i or vice versa.
 * Weights are exp(-|x_i - x_j|^2 / sigma^2). Self-loops are never created.
 * With an automatic scale, sigma is the mean distance to the K-th neighbor;
 * if that is zero (all points coincide) sigma falls back to 1.
 */
inline WeightedGraph knn_graph(const Matrix& data, Index K = 10,
                               KernelScale scale = KernelScale::automatic()) {
  detail::require_finite(data, "knn_graph");
  if (K < 1) throw InvalidArgument("knn_graph: K must be positive");
  if (data.rows() < K + 1) {
    throw SizeError("knn_graph: need at least K+1 = " + std::to_string(K + 1) +
                    " samples, got " + std::to_string(data.rows()));
  }
  auto [neighbors, distances] = detail::nearest_neighbors(data, K);

  double sigma = 0.0;
  if (scale.sigma) {
    sigma = *scale.sigma;
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("knn_graph: sigma must be positive");
  } else {
    for (const auto& d : distances) sigma += d.back();
    sigma /= static_cast<double>(distances.size());
    if (sigma == 0.0) sigma = 1.0;
  }

  std::vector<Triplet> edges;
  edges.reserve(neighbors.size() * static_cast<std::size_t>(K));
  const double inv = 1.0 / (sigma * sigma);
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    for (std::size_t t = 0; t < neighbors[i].size(); ++t) {
      const double d = distances[i][t];
      edges.emplace_back(static_cast<Index>(i), neighbors[i][t], std::exp(-d * d * inv));
    }
  }
  return WeightedGraph::from_edges(data.rows(), edges);
}

/// Default kernel scale used by knn_graph for this data and K.
inline double knn_kernel_scale(const Matrix& data, Index K = 10) {
  detail::require_finite(data, "knn_kernel_scale");
  if (K < 1 || data.rows() < K + 1) throw SizeError("knn_kernel_scale: need at least K+1 samples");
  auto distances = detail::nearest_neighbors(data, K).second;
  double sigma = 0.0;
  for (const auto& d : distances) sigma += d.back();
  sigma /= static_cast<double>(distances.size());
  return sigma == 0.0 ? 1.0 : sigma;
}

/**
 * Centers every column to zero mean and scales it to unit population
 * standard deviation (divide by n, not n-1). Constant columns become zero.
 */
inline Matrix standardize_features(const Matrix& data) {
  detail::require_finite(data, "standardize_features");
  Matrix out(data.rows(), data.cols());
  if (data.rows() == 0) return out;
  const double n = static_cast<double>(data.rows());
  for (Index c = 0; c < data.cols(); ++c) {
    const double mean = data.col(c).sum() / n;
    const double var = (data.col(c).array() - mean).square().sum() / n;
    const double sd = std::sqrt(var);
    if (sd <= 1e-14 * std::max(1.0, std::abs(mean))) {
      out.col(c).setZero();
    } else {
      out.col(c) = (data.col(c).array() - mean) / sd;
    }
  }
  return out;
}

/// Number of connected components (edges with positive weight).
inline Index connected_components(const WeightedGraph& g) {
  std::vector<Index> parent(static_cast<std::size_t>(g.size()));
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& p = parent[static_cast<std::size_t>(x)];
      p = parent[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  };
  Index count = g.size();
  for (const auto& e : g.edges()) {
    const Index a = find(e.row());
    const Index b = find(e.col());
    if (a != b) {
      parent[static_cast<std::size_t>(a)] = b;
      --count;
    }
  }
  return count;
}

}  // namespace fmgraph
