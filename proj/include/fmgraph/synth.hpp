#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "fmgraph/error.hpp"
#include "fmgraph/graph.hpp"
#include "fmgraph/random.hpp"
#include "fmgraph/solver.hpp"
#include "fmgraph/spectral.hpp"

namespace fmgraph {

/// Stochastic block model with contiguous, near-equal blocks and unit weights.
inline WeightedGraph community_graph(Index n, Index blocks, double p_in, double p_out, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("community_graph: n must be positive");
  if (blocks < 1 || blocks > n) throw InvalidArgument("community_graph: blocks must be in [1, n]");
  if (!(p_in >= 0.0 && p_in <= 1.0) || !(p_out >= 0.0 && p_out < p_in)) {
    throw InvalidArgument("community_graph: need 0 <= p_out < p_in <= 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto block_of = [&](Index i) { return i * blocks / n; };
  std::vector<Triplet> edges;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double p = block_of(i) == block_of(j) ? p_in : p_out;
      if (unit(rng) < p) edges.emplace_back(i, j, 1.0);
    }
  }
  return WeightedGraph::from_edges(n, edges);
}

/// Random r x r orthogonal matrix (QR of a Gaussian matrix, sign-fixed).
inline Matrix random_orthogonal(Index r, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix g(r, r);
  for (Index j = 0; j < r; ++j) {
    for (Index i = 0; i < r; ++i) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(r, r);
  const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < r; ++j) {
    if (R(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

/**
 * M = Phi_r U V^T Psi_r^T where Phi_r, Psi_r are the leading r basis vectors
 * and U, V are random r x r orthogonal matrices. M has rank exactly r, all
 * nonzero singular values equal to 1, and its singular vectors lie in the
 * spans of the bases.
 */
inline Matrix basis_consistent_matrix(const SpectralBasis& row_basis, const SpectralBasis& col_basis, Index r,
                                      std::uint64_t seed) {
  if (r < 0) throw InvalidArgument("basis_consistent_matrix: negative rank");
  if (r > row_basis.dim() || r > col_basis.dim()) {
    throw SizeError("basis_consistent_matrix: rank " + std::to_string(r) + " exceeds basis size");
  }
  if (r == 0) return Matrix::Zero(row_basis.size(), col_basis.size());
  std::mt19937_64 rng(seed);
  const Matrix U = random_orthogonal(r, rng);
  const Matrix V = random_orthogonal(r, rng);
  return row_basis.vectors.leftCols(r) * U * V.transpose() * col_basis.vectors.leftCols(r).transpose();
}

/// Adds i.i.d. N(0, sigma^2) noise to every entry.
inline Matrix add_full_rank_noise(const Matrix& M, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidArgument("add_full_rank_noise: sigma must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  Matrix out = M;
  if (sigma == 0.0) return out;
  for (Index j = 0; j < out.cols(); ++j) {
    for (Index i = 0; i < out.rows(); ++i) out(i, j) += normal(rng);
  }
  return out;
}

/// Exactly round(density * m * n) ones at uniformly random positions.
inline Matrix sample_mask(Index m, Index n, double density, std::uint64_t seed) {
  if (!(density > 0.0 && density <= 1.0)) throw InvalidArgument("sample_mask: density must be in (0, 1]");
  if (m < 0 || n < 0) throw InvalidArgument("sample_mask: negative size");
  const Index total = m * n;
  const auto count = static_cast<Index>(std::llround(density * static_cast<double>(total)));
  std::vector<Index> cells(static_cast<std::size_t>(total));
  std::iota(cells.begin(), cells.end(), Index{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first `count` slots form the sample.
  for (Index t = 0; t < count; ++t) {
    std::uniform_int_distribution<Index> pick(t, total - 1);
    std::swap(cells[static_cast<std::size_t>(t)], cells[static_cast<std::size_t>(pick(rng))]);
  }
  Matrix mask = Matrix::Zero(m, n);
  for (Index t = 0; t < count; ++t) {
    const Index c = cells[static_cast<std::size_t>(t)];
    mask(c % m, c / m) = 1.0;
  }
  return mask;
}

/**
 * Adds independent N(0, sigma^2) noise to both directed copies of every
 * existing edge, drops entries that turn negative, then averages the two
 * copies. Absent edges stay absent.
 */
inline WeightedGraph perturb_adjacency(const WeightedGraph& g, double noise_sigma, std::uint64_t seed) {
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw InvalidArgument("perturb_adjacency: noise_sigma must be >= 0");
  }
  if (noise_sigma == 0.0) return g;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, noise_sigma);
  std::vector<Triplet> edges;
  for (const auto& e : g.edges()) {
    const double forward = std::max(0.0, e.value() + normal(rng));
    const double backward = std::max(0.0, e.value() + normal(rng));
    const double w = 0.5 * (forward + backward);
    if (w > 0.0) edges.emplace_back(e.row(), e.col(), w);
  }
  return WeightedGraph::from_edges(g.size(), edges);
}

/// Mean weight over existing edges (0 for an edgeless graph).
inline double mean_edge_weight(const WeightedGraph& g) {
  const auto edges = g.edges();
  if (edges.empty()) return 0.0;
  double s = 0.0;
  for (const auto& e : edges) s += e.value();
  return s / static_cast<double>(edges.size());
}

/// Noise level given in percent of the mean edge weight, as an absolute sigma.
inline double relative_noise_sigma(const WeightedGraph& g, double level_percent) {
  return level_percent / 100.0 * mean_edge_weight(g);
}

struct SyntheticSpec {
  Index m = 150;
  Index n = 200;
  Index rank = 10;
  Index communities_rows = 4;
  Index communities_cols = 4;
  double p_in = 0.5;
  double p_out = 0.01;
  double density = 0.1;
  /// Graph noise level, percent of the mean edge weight.
  double noise_level = 0.0;
  /// Std of i.i.d. noise added to the ground truth (0: exactly basis-consistent).
  double matrix_noise = 0.0;
  /// Basis size used both for generation and for fitting.
  Index k = 30;
  std::uint64_t seed = 0;

  void validate() const {
    if (m < 1 || n < 1) throw InvalidArgument("SyntheticSpec: m and n must be positive");
    if (rank < 1 || rank > std::min(m, n)) throw InvalidArgument("SyntheticSpec: rank must be in [1, min(m, n)]");
    if (!(density > 0.0 && density <= 1.0)) throw InvalidArgument("SyntheticSpec: density must be in (0, 1]");
    if (!(noise_level >= 0.0)) throw InvalidArgument("SyntheticSpec: noise level must be >= 0");
    if (!(matrix_noise >= 0.0)) throw InvalidArgument("SyntheticSpec: matrix noise must be >= 0");
    if (k < rank || k > std::min(m, n)) throw InvalidArgument("SyntheticSpec: need rank <= k <= min(m, n)");
  }
};

/// A generated completion problem. `row_basis`/`col_basis` come from the
/// (possibly perturbed) graphs handed to the solver; the ground truth is built
/// from the clean graphs' bases.
struct SyntheticInstance {
  WeightedGraph row_graph;
  WeightedGraph col_graph;
  SpectralBasis row_basis;
  SpectralBasis col_basis;
  Matrix ground_truth;
  Matrix train_mask;
  Matrix test_mask;

  MaskedMatrix observed() const { return MaskedMatrix(ground_truth, train_mask); }
};

inline SyntheticInstance make_instance(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticInstance inst;
  const WeightedGraph clean_rows =
      community_graph(spec.m, spec.communities_rows, spec.p_in, spec.p_out, derive_seed(spec.seed, 1));
  const WeightedGraph clean_cols =
      community_graph(spec.n, spec.communities_cols, spec.p_in, spec.p_out, derive_seed(spec.seed, 2));
  const SpectralBasis clean_row_basis = smallest_eigenpairs(laplacian(clean_rows), spec.k);
  const SpectralBasis clean_col_basis = smallest_eigenpairs(laplacian(clean_cols), spec.k);

  inst.ground_truth = basis_consistent_matrix(clean_row_basis, clean_col_basis, spec.rank, derive_seed(spec.seed, 3));
  if (spec.matrix_noise > 0.0) {
    inst.ground_truth = add_full_rank_noise(inst.ground_truth, spec.matrix_noise, derive_seed(spec.seed, 4));
  }
  inst.train_mask = sample_mask(spec.m, spec.n, spec.density, derive_seed(spec.seed, 5));
  inst.test_mask = Matrix::Ones(spec.m, spec.n) - inst.train_mask;

  if (spec.noise_level > 0.0) {
    inst.row_graph = perturb_adjacency(clean_rows, relative_noise_sigma(clean_rows, spec.noise_level),
                                       derive_seed(spec.seed, 6));
    inst.col_graph = perturb_adjacency(clean_cols, relative_noise_sigma(clean_cols, spec.noise_level),
                                       derive_seed(spec.seed, 7));
    inst.row_basis = smallest_eigenpairs(laplacian(inst.row_graph), spec.k);
    inst.col_basis = smallest_eigenpairs(laplacian(inst.col_graph), spec.k);
  } else {
    inst.row_graph = clean_rows;
    inst.col_graph = clean_cols;
    inst.row_basis = clean_row_basis;
    inst.col_basis = clean_col_basis;
  }
  return inst;
}

struct CompletionOutcome {
  FitResult fit;
  double test_rmse = 0.0;
};

/// Fits the instance's training entries and scores the complement.
inline CompletionOutcome run_completion(const SyntheticInstance& inst, const FitConfig& cfg) {
  CompletionOutcome out;
  out.fit = fit(inst.observed(), inst.row_basis, inst.col_basis, cfg);
  const Matrix X = reconstruct(out.fit.map);
  double sse = 0.0;
  double count = 0.0;
  for (Index j = 0; j < X.cols(); ++j) {
    for (Index i = 0; i < X.rows(); ++i) {
      if (inst.test_mask(i, j) == 0.0) continue;
      const double d = X(i, j) - inst.ground_truth(i, j);
      sse += d * d;
      count += 1.0;
    }
  }
  out.test_rmse = count > 0.0 ? std::sqrt(sse / count) : std::nan("");
  out.fit.report.metrics["test_rmse"] = out.test_rmse;
  return out;
}

}  // namespace fmgraph
