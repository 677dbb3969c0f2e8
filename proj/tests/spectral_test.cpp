#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fmgraph/spectral.hpp"
#include "oracles.hpp"

using namespace fmgraph;

namespace {

WeightedGraph path_graph(Index n) {
  std::vector<Triplet> e;
  for (Index i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1, 1.0);
  return WeightedGraph::from_edges(n, e);
}

WeightedGraph erdos_renyi(Index n, double p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Triplet> e;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (unit(rng) < p) e.emplace_back(i, j, 0.1 + unit(rng));
    }
  }
  return WeightedGraph::from_edges(n, e);
}

EigenSolverOptions force_lanczos() {
  EigenSolverOptions opt;
  opt.dense_threshold = 0;
  return opt;
}

}  // namespace

TEST(Spectral, PathGraphClosedForm) {
  // Unit path on n nodes: lambda_j = 2 - 2 cos(pi j / n), j = 0..n-1.
  const Index n = 12;
  const GraphLaplacian L = laplacian(path_graph(n));
  for (const auto& opt : {EigenSolverOptions{}, force_lanczos()}) {
    const SpectralBasis b = smallest_eigenpairs(L, 6, opt);
    for (Index j = 0; j < 6; ++j) {
      EXPECT_NEAR(b.values(j), 2.0 - 2.0 * std::cos(std::numbers::pi * j / n), 1e-10);
    }
  }
}

TEST(Spectral, ConstantVectorFirstOnConnectedGraph) {
  std::mt19937_64 rng(4);
  const GraphLaplacian L = laplacian(erdos_renyi(30, 0.3, rng));
  const SpectralBasis b = smallest_eigenpairs(L, 3);
  EXPECT_NEAR(b.values(0), 0.0, 1e-10);
  const Vector expected = Vector::Constant(30, 1.0 / std::sqrt(30.0));
  EXPECT_LE((b.vectors.col(0) - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Spectral, ZeroMultiplicityEqualsComponentCount) {
  // Three disjoint triangles plus an isolated node: four components.
  std::vector<Triplet> e;
  for (Index c = 0; c < 3; ++c) {
    const Index o = 3 * c;
    e.emplace_back(o, o + 1, 1.0);
    e.emplace_back(o + 1, o + 2, 1.0);
    e.emplace_back(o, o + 2, 1.0);
  }
  const WeightedGraph g = WeightedGraph::from_edges(10, e);
  ASSERT_EQ(connected_components(g), 4);
  const GraphLaplacian L = laplacian(g);
  for (const auto& opt : {EigenSolverOptions{}, force_lanczos()}) {
    const SpectralBasis b = smallest_eigenpairs(L, 6, opt);
    for (Index j = 0; j < 4; ++j) EXPECT_NEAR(b.values(j), 0.0, 1e-10);
    // Each triangle contributes eigenvalue 3 twice.
    EXPECT_NEAR(b.values(4), 3.0, 1e-10);
    EXPECT_NEAR(b.values(5), 3.0, 1e-10);
    const auto diag = validate_basis(b, L);
    EXPECT_LE(diag.orthonormality_error, 1e-10);
    EXPECT_LE(diag.eigen_residual, 1e-10);
  }
}

TEST(Spectral, LanczosMatchesDenseOracleOnLargerGraph) {
  std::mt19937_64 rng(21);
  const GraphLaplacian L = laplacian(erdos_renyi(300, 0.05, rng));
  const Index k = 20;
  const SpectralBasis lan = smallest_eigenpairs(L, k, force_lanczos());
  const oracle::Vector ev = oracle::dense_eigenvalues(L.dense());
  for (Index j = 0; j < k; ++j) EXPECT_NEAR(lan.values(j), ev(j), 1e-8);
  const auto diag = validate_basis(lan, L);
  EXPECT_LE(diag.orthonormality_error, 1e-10);
  EXPECT_LE(diag.eigen_residual, 1e-9);
  EXPECT_TRUE(diag.ascending);
  if (ev(k) - ev(k - 1) > 1e-6) {
    EXPECT_LE(oracle::max_principal_angle(lan.vectors, oracle::smallest_eigenvectors(L.dense(), k)), 1e-6);
  }
}

TEST(Spectral, SignConventionLargestEntryPositive) {
  std::mt19937_64 rng(8);
  const GraphLaplacian L = laplacian(erdos_renyi(40, 0.2, rng));
  for (const auto& opt : {EigenSolverOptions{}, force_lanczos()}) {
    const SpectralBasis b = smallest_eigenpairs(L, 8, opt);
    for (Index c = 0; c < b.dim(); ++c) {
      Index arg = 0;
      b.vectors.col(c).cwiseAbs().maxCoeff(&arg);
      EXPECT_GT(b.vectors(arg, c), 0.0);
    }
  }
}

TEST(Spectral, FullSpectrumWhenKEqualsN) {
  const GraphLaplacian L = laplacian(path_graph(5));
  const SpectralBasis b = smallest_eigenpairs(L, 5);
  EXPECT_EQ(b.dim(), 5);
  EXPECT_LE((b.vectors.transpose() * b.vectors - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Spectral, InvalidKIsSizeError) {
  const GraphLaplacian L = laplacian(path_graph(5));
  EXPECT_THROW(smallest_eigenpairs(L, 6), SizeError);
  EXPECT_THROW(smallest_eigenpairs(L, 0), SizeError);
}

TEST(Spectral, TruncationKeepsLeadingPairs) {
  const SpectralBasis b = smallest_eigenpairs(laplacian(path_graph(8)), 5);
  const SpectralBasis t = b.truncated(3);
  EXPECT_EQ(t.vectors, b.vectors.leftCols(3));
  EXPECT_EQ(t.values, b.values.head(3));
  EXPECT_THROW(b.truncated(6), SizeError);
}

TEST(Spectral, ValidateBasisFlagsBrokenInput) {
  const GraphLaplacian L = laplacian(path_graph(6));
  SpectralBasis b = smallest_eigenpairs(L, 3);
  b.vectors.col(1) *= 2.0;
  EXPECT_GT(validate_basis(b, L).orthonormality_error, 0.5);
  std::swap(b.values(0), b.values(2));
  EXPECT_FALSE(validate_basis(b, L).ascending);
  EXPECT_THROW(validate_basis(smallest_eigenpairs(laplacian(path_graph(7)), 3), L), DimensionMismatch);
}

TEST(Spectral, LanczosIsDeterministic) {
  std::mt19937_64 rng(13);
  const GraphLaplacian L = laplacian(erdos_renyi(120, 0.08, rng));
  const SpectralBasis a = smallest_eigenpairs(L, 10, force_lanczos());
  const SpectralBasis b = smallest_eigenpairs(L, 10, force_lanczos());
  EXPECT_EQ(a.vectors, b.vectors);
  EXPECT_EQ(a.values, b.values);
}
