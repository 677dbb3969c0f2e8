#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fmgraph/error.hpp"
#include "fmgraph/graph.hpp"

namespace fmgraph {

/// k smallest eigenpairs of a graph Laplacian, eigenvalues ascending.
struct SpectralBasis {
  Matrix vectors;  // n x k, orthonormal columns
  Vector values;   // k

  Index size() const { return vectors.rows(); }
  Index dim() const { return vectors.cols(); }

  /// Leading `k` columns of this basis.
  SpectralBasis truncated(Index k) const {
    if (k < 0 || k > dim()) throw SizeError("SpectralBasis::truncated: k out of range");
    return {vectors.leftCols(k), values.head(k)};
  }
};

struct EigenSolverOptions {
  /// Problems with n at or below this use a dense symmetric eigensolver.
  Index dense_threshold = 2000;
  /// Largest Krylov subspace built before an explicit restart.
  Index max_krylov = 200;
  int max_restarts = 200;
  /// Residual tolerance relative to a bound on ||L||_2.
  double tolerance = 1e-11;
  std::uint64_t seed = 0x5eed;
};

namespace detail {

/// Flips each column so its largest-magnitude entry is positive (first wins ties).
inline void canonicalize_signs(Matrix& vectors) {
  for (Index c = 0; c < vectors.cols(); ++c) {
    Index best = 0;
    for (Index r = 1; r < vectors.rows(); ++r) {
      if (std::abs(vectors(r, c)) > std::abs(vectors(best, c))) best = r;
    }
    if (vectors.rows() > 0 && vectors(best, c) < 0.0) vectors.col(c) *= -1.0;
  }
}

inline SpectralBasis dense_smallest(const GraphLaplacian& L, Index k) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(L.dense());
  if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed", 0);
  return {es.eigenvectors().leftCols(k), es.eigenvalues().head(k)};
}

/// Gershgorin bound on the spectral radius of a Laplacian: 2 * max degree.
inline double laplacian_norm_bound(const GraphLaplacian& L) {
  const double d = L.degree.size() ? L.degree.maxCoeff() : 0.0;
  return std::max(2.0 * d, 1.0);
}

/**
 * Lanczos with full reorthogonalization and explicit locking. Each cycle
 * works in the orthogonal complement of the already-locked eigenvectors and
 * locks the converged prefix of its lowest Ritz values. A final sweep checks
 * the complement for eigenvalues missed because of multiplicity.
 */
inline SpectralBasis lanczos_smallest(const GraphLaplacian& L, Index k,
                                      const EigenSolverOptions& opt) {
  const Index n = L.size();
  const double tol = opt.tolerance * laplacian_norm_bound(L);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;

  Matrix locked(n, 0);
  std::vector<double> locked_values;
  long total_iters = 0;

  auto orthogonalize = [&](Vector& v, const Matrix& basis, Index cols) {
    for (int pass = 0; pass < 2; ++pass) {
      if (locked.cols() > 0) v -= locked * (locked.transpose() * v);
      if (cols > 0) v -= basis.leftCols(cols) * (basis.leftCols(cols).transpose() * v);
    }
  };
  auto random_start = [&]() {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = normal(rng);
    return v;
  };
  auto lock = [&](const Vector& v, double value) {
    locked.conservativeResize(Eigen::NoChange, locked.cols() + 1);
    locked.col(locked.cols() - 1) = v;
    locked_values.push_back(value);
  };

  Vector start = random_start();
  bool verifying = false;
  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    const Index room = n - locked.cols();
    if (room == 0) break;
    const Index max_dim = std::min(opt.max_krylov, room);

    Matrix Q(n, max_dim);
    std::vector<double> alpha, beta;
    Vector q = start;
    orthogonalize(q, Q, 0);
    double qn = q.norm();
    if (qn < 1e-12) {
      q = random_start();
      orthogonalize(q, Q, 0);
      qn = q.norm();
    }
    Q.col(0) = q / qn;

    Eigen::SelfAdjointEigenSolver<Matrix> ritz;
    Index dim = 0;
    bool invariant = false;
    for (Index j = 0; j < max_dim; ++j) {
      ++total_iters;
      Vector w = L.matrix * Q.col(j);
      alpha.push_back(Q.col(j).dot(w));
      orthogonalize(w, Q, j + 1);
      const double b = w.norm();
      dim = j + 1;
      if (b <= 1e-13 * laplacian_norm_bound(L)) {
        invariant = true;
        break;
      }
      beta.push_back(b);
      if (j + 1 < max_dim) Q.col(j + 1) = w / b;
    }

    Matrix T = Matrix::Zero(dim, dim);
    for (Index i = 0; i < dim; ++i) {
      T(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < dim) {
        T(i, i + 1) = beta[static_cast<std::size_t>(i)];
        T(i + 1, i) = beta[static_cast<std::size_t>(i)];
      }
    }
    ritz.compute(T);
    const double last_beta = invariant ? 0.0 : beta.back();
    const Matrix ritz_vectors = Q.leftCols(dim) * ritz.eigenvectors();

    const std::size_t before = locked_values.size();
    if (verifying) {
      // Only the smallest remaining eigenvalue matters for verification.
      const double resid = std::abs(last_beta * ritz.eigenvectors()(dim - 1, 0));
      if (resid <= tol) {
        const double theta = ritz.eigenvalues()(0);
        const double largest = *std::max_element(locked_values.begin(), locked_values.end());
        if (theta >= largest - tol) break;
        lock(ritz_vectors.col(0), theta);
      }
    } else {
      for (Index i = 0; i < dim && static_cast<Index>(locked_values.size()) < k; ++i) {
        const double resid = std::abs(last_beta * ritz.eigenvectors()(dim - 1, i));
        if (resid > tol) break;
        lock(ritz_vectors.col(i), ritz.eigenvalues()(i));
      }
    }

    if (static_cast<Index>(locked_values.size()) >= k && !verifying) verifying = true;
    if (verifying && static_cast<Index>(locked_values.size()) > k) {
      // Keep the k smallest, drop the rest.
      std::vector<Index> order(locked_values.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);
      std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        return locked_values[static_cast<std::size_t>(a)] < locked_values[static_cast<std::size_t>(b)];
      });
      Matrix kept(n, k);
      std::vector<double> kept_values;
      for (Index i = 0; i < k; ++i) {
        kept.col(i) = locked.col(order[static_cast<std::size_t>(i)]);
        kept_values.push_back(locked_values[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
      }
      locked = std::move(kept);
      locked_values = std::move(kept_values);
    }
    if (verifying && locked.cols() == n) break;

    // Restart from the lowest unconverged Ritz vector when nothing locked,
    // otherwise from a fresh random direction.
    if (locked_values.size() == before && !invariant) {
      start = ritz_vectors.col(0);
    } else {
      start = random_start();
    }
    if (restart == opt.max_restarts) {
      throw ConvergenceError("Lanczos eigensolver did not converge for k=" + std::to_string(k),
                             total_iters);
    }
  }

  std::vector<Index> order(locked_values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return locked_values[static_cast<std::size_t>(a)] < locked_values[static_cast<std::size_t>(b)];
  });
  SpectralBasis out{Matrix(n, k), Vector(k)};
  for (Index i = 0; i < k; ++i) {
    out.vectors.col(i) = locked.col(order[static_cast<std::size_t>(i)]);
    out.values(i) = locked_values[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
  }
  // One Rayleigh-Ritz pass tidies orthogonality across locking cycles.
  Eigen::HouseholderQR<Matrix> qr(out.vectors);
  const Matrix basis = qr.householderQ() * Matrix::Identity(n, k);
  Eigen::SelfAdjointEigenSolver<Matrix> rr(basis.transpose() * (L.matrix * basis));
  out.vectors = basis * rr.eigenvectors();
  out.values = rr.eigenvalues();
  return out;
}

}  // namespace detail

/**
 * The k smallest eigenpairs of L, ascending. Dense decomposition for small
 * problems, Lanczos above `opt.dense_threshold`. Each eigenvector is signed so
 * its largest-magnitude entry is positive; no rotation is applied inside
 * repeated eigenvalues.
 */
inline SpectralBasis smallest_eigenpairs(const GraphLaplacian& L, Index k,
                                         const EigenSolverOptions& opt = {}) {
  const Index n = L.size();
  if (k < 1) throw SizeError("smallest_eigenpairs: k must be at least 1");
  if (k > n) {
    throw SizeError("smallest_eigenpairs: k = " + std::to_string(k) + " exceeds n = " +
                    std::to_string(n));
  }
  SpectralBasis out = n <= opt.dense_threshold ? detail::dense_smallest(L, k)
                                               : detail::lanczos_smallest(L, k, opt);
  detail::canonicalize_signs(out.vectors);
  return out;
}

struct BasisDiagnostics {
  /// max |V^T V - I| over entries.
  double orthonormality_error = 0.0;
  /// ||L V - V diag(values)||_F / max(1, ||L||_F).
  double eigen_residual = 0.0;
  bool ascending = true;
};

inline BasisDiagnostics validate_basis(const SpectralBasis& b, const GraphLaplacian& L) {
  if (b.vectors.rows() != L.size() || b.values.size() != b.vectors.cols()) {
    throw DimensionMismatch("validate_basis: basis is " + std::to_string(b.vectors.rows()) + "x" +
                            std::to_string(b.vectors.cols()) + " with " +
                            std::to_string(b.values.size()) + " values, Laplacian is " +
                            std::to_string(L.size()) + "x" + std::to_string(L.size()));
  }
  BasisDiagnostics d;
  const Matrix gram = b.vectors.transpose() * b.vectors;
  d.orthonormality_error = (gram - Matrix::Identity(b.dim(), b.dim())).cwiseAbs().maxCoeff();
  if (b.dim() == 0) d.orthonormality_error = 0.0;
  const Matrix resid = L.matrix * b.vectors - b.vectors * b.values.asDiagonal();
  d.eigen_residual = resid.norm() / std::max(1.0, L.matrix.norm());
  for (Index i = 1; i < b.values.size(); ++i) {
    if (b.values(i) < b.values(i - 1)) d.ascending = false;
  }
  return d;
}

}  // namespace fmgraph
