#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fmgraph/error.hpp"
#include "fmgraph/graph.hpp"
#include "fmgraph/report.hpp"
#include "fmgraph/spectral.hpp"

// Conventions used throughout this header:
//   M is m x n. Phi (row basis, m x k_r) comes from the graph over the rows of
//   M, Psi (column basis, n x k_c) from the graph over its columns.
//   X = Phi * P * C * Q^T * Psi^T with C k_r x k_c, P k_r x k_r, Q k_c x k_c.
//   The commutativity term penalizes C_ij by (lambda_r[i] - lambda_c[j])^2,
//   i.e. ||C * diag(lambda_c) - diag(lambda_r) * C||_F^2, which is defined for
//   rectangular C. It always acts on C alone, never on P*C*Q^T.

namespace fmgraph {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Data matrix with a binary support mask. Unobserved values are stored as 0.
struct MaskedMatrix {
  Matrix values;
  Matrix mask;

  MaskedMatrix() = default;
  MaskedMatrix(Matrix v, Matrix s) : values(std::move(v)), mask(std::move(s)) {
    if (values.rows() != mask.rows() || values.cols() != mask.cols()) {
      throw DimensionMismatch("MaskedMatrix: values and mask shapes differ");
    }
    for (Index j = 0; j < mask.cols(); ++j) {
      for (Index i = 0; i < mask.rows(); ++i) {
        const double s_ij = mask(i, j);
        if (s_ij != 0.0 && s_ij != 1.0) throw InvalidArgument("MaskedMatrix: mask entries must be 0 or 1");
        if (s_ij == 0.0) {
          values(i, j) = 0.0;
        } else if (!std::isfinite(values(i, j))) {
          throw InvalidArgument("MaskedMatrix: non-finite observed value at (" + std::to_string(i) +
                                ", " + std::to_string(j) + ")");
        }
      }
    }
  }

  static MaskedMatrix fully_observed(Matrix v) {
    Matrix ones = Matrix::Ones(v.rows(), v.cols());
    return MaskedMatrix(std::move(v), std::move(ones));
  }

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  Index observed_count() const { return static_cast<Index>(mask.sum()); }
};

/// Observed entries as parallel arrays, column-major order.
struct Observations {
  std::vector<Index> rows;
  std::vector<Index> cols;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }

  static Observations from(const MaskedMatrix& mm) {
    Observations o;
    for (Index j = 0; j < mm.cols(); ++j) {
      for (Index i = 0; i < mm.rows(); ++i) {
        if (mm.mask(i, j) != 0.0) {
          o.rows.push_back(i);
          o.cols.push_back(j);
          o.values.push_back(mm.values(i, j));
        }
      }
    }
    return o;
  }
};

struct FunctionalMap {
  Matrix C;
  Matrix P;
  Matrix Q;
  SpectralBasis row_basis;
  SpectralBasis col_basis;
  /// When false, P and Q stay the identity and receive no gradient.
  bool use_pq = false;

  Index k_rows() const { return row_basis.dim(); }
  Index k_cols() const { return col_basis.dim(); }

  /// The effective coefficient matrix P * C * Q^T.
  Matrix coefficients() const { return use_pq ? Matrix(P * C * Q.transpose()) : C; }
};

enum class Optimizer { plain_gd, adaptive };

inline const char* to_string(Optimizer o) { return o == Optimizer::plain_gd ? "plain_gd" : "adaptive"; }

struct FitConfig {
  double mu = 1e-5;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::adaptive;
  long max_iters = 20000;
  /// Validation RMSE is evaluated every `eval_every` iterations.
  long eval_every = 100;
  /// Stop after this many evaluations without a new best.
  long patience = 20;
  double val_fraction = 0.05;
  bool use_pq = false;
  std::uint64_t seed = 0;

  /// Plain gradient descent with mu = learning rate = 1e-5.
  static FitConfig paper_defaults() {
    FitConfig c;
    c.mu = 1e-5;
    c.learning_rate = 1e-5;
    c.optimizer = Optimizer::plain_gd;
    return c;
  }

  void validate() const {
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw InvalidArgument("FitConfig: mu must be >= 0");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("FitConfig: learning_rate must be > 0");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw InvalidArgument("FitConfig: val_fraction must be in [0, 1)");
    if (max_iters < 0) throw InvalidArgument("FitConfig: max_iters must be >= 0");
    if (eval_every < 1) throw InvalidArgument("FitConfig: eval_every must be >= 1");
    if (patience < 1) throw InvalidArgument("FitConfig: patience must be >= 1");
  }
};

/// The two named configurations: full model, and the mu = 0 ablation over C alone.
enum class Method { ours, ours_fm };

inline const char* to_string(Method m) { return m == Method::ours ? "ours" : "ours_fm"; }

inline FitConfig method_config(Method m, FitConfig base = {}) {
  if (m == Method::ours) {
    base.use_pq = true;
  } else {
    base.mu = 0.0;
    base.use_pq = false;
  }
  return base;
}

namespace detail {

inline void check_bases(const SpectralBasis& row_basis, const SpectralBasis& col_basis, Index m, Index n,
                        const char* who) {
  if (row_basis.size() != m || col_basis.size() != n) {
    throw DimensionMismatch(std::string(who) + ": bases are " + std::to_string(row_basis.size()) + " and " +
                            std::to_string(col_basis.size()) + " long, matrix is " + std::to_string(m) +
                            "x" + std::to_string(n));
  }
  if (row_basis.values.size() != row_basis.dim() || col_basis.values.size() != col_basis.dim()) {
    throw DimensionMismatch(std::string(who) + ": eigenvalue count does not match basis size");
  }
}

inline void check_map(const FunctionalMap& fm) {
  const Index kr = fm.k_rows();
  const Index kc = fm.k_cols();
  if (fm.C.rows() != kr || fm.C.cols() != kc || fm.P.rows() != kr || fm.P.cols() != kr ||
      fm.Q.rows() != kc || fm.Q.cols() != kc) {
    throw DimensionMismatch("FunctionalMap: C must be k_r x k_c, P k_r x k_r, Q k_c x k_c");
  }
}

/// (lambda_r[i] - lambda_c[j])^2 for every entry of C.
inline Matrix commutativity_weights(const SpectralBasis& row_basis, const SpectralBasis& col_basis) {
  Matrix w(row_basis.dim(), col_basis.dim());
  for (Index j = 0; j < w.cols(); ++j) {
    for (Index i = 0; i < w.rows(); ++i) {
      const double d = row_basis.values(i) - col_basis.values(j);
      w(i, j) = d * d;
    }
  }
  return w;
}

/**
 * Evaluates the masked data term and its gradient with respect to the
 * effective coefficients A = P C Q^T, touching only observed entries.
 */
class DataTermEvaluator {
 public:
  DataTermEvaluator(const SpectralBasis& row_basis, const SpectralBasis& col_basis)
      : phi_(row_basis.vectors), psi_(col_basis.vectors) {}

  /// Sum of squared residuals over `obs`; `grad_a` (optional) receives dE/dA.
  double evaluate(const Matrix& A, const Observations& obs, Matrix* grad_a) {
    u_.noalias() = phi_ * A;
    if (grad_a) t_.setZero(phi_.rows(), psi_.cols());
    double energy = 0.0;
    for (std::size_t e = 0; e < obs.size(); ++e) {
      const Index i = obs.rows[e];
      const Index j = obs.cols[e];
      const double r = u_.row(i).dot(psi_.row(j)) - obs.values[e];
      energy += r * r;
      if (grad_a) t_.row(i).noalias() += r * psi_.row(j);
    }
    if (grad_a) grad_a->noalias() = 2.0 * phi_.transpose() * t_;
    return energy;
  }

  /// RMSE of the current A on `obs` (0 if `obs` is empty).
  double rmse(const Matrix& A, const Observations& obs) {
    if (obs.size() == 0) return 0.0;
    return std::sqrt(evaluate(A, obs, nullptr) / static_cast<double>(obs.size()));
  }

 private:
  RowMatrix phi_;
  RowMatrix psi_;
  RowMatrix u_;
  RowMatrix t_;
};

}  // namespace detail

/**
 * Initial map: P = I, Q = I, C = Phi^T (M .* S) Psi.
 */
inline FunctionalMap init_map(const SpectralBasis& row_basis, const SpectralBasis& col_basis,
                              const MaskedMatrix& masked, bool use_pq) {
  detail::check_bases(row_basis, col_basis, masked.rows(), masked.cols(), "init_map");
  FunctionalMap fm;
  fm.row_basis = row_basis;
  fm.col_basis = col_basis;
  fm.use_pq = use_pq;
  fm.C = row_basis.vectors.transpose() * masked.values.cwiseProduct(masked.mask) * col_basis.vectors;
  fm.P = Matrix::Identity(row_basis.dim(), row_basis.dim());
  fm.Q = Matrix::Identity(col_basis.dim(), col_basis.dim());
  return fm;
}

/// X = Phi P C Q^T Psi^T.
inline Matrix reconstruct(const FunctionalMap& fm) {
  detail::check_map(fm);
  return fm.row_basis.vectors * fm.coefficients() * fm.col_basis.vectors.transpose();
}

/// ||(X - M) .* S||_F^2.
inline double data_term(const FunctionalMap& fm, const MaskedMatrix& masked) {
  detail::check_map(fm);
  detail::check_bases(fm.row_basis, fm.col_basis, masked.rows(), masked.cols(), "data_term");
  detail::DataTermEvaluator eval(fm.row_basis, fm.col_basis);
  return eval.evaluate(fm.coefficients(), Observations::from(masked), nullptr);
}

/// ||C diag(lambda_c) - diag(lambda_r) C||_F^2, on C alone.
inline double commutativity_reg(const FunctionalMap& fm) {
  detail::check_map(fm);
  return (fm.C.array().square() * detail::commutativity_weights(fm.row_basis, fm.col_basis).array()).sum();
}

inline double objective(const FunctionalMap& fm, const MaskedMatrix& masked, double mu) {
  return data_term(fm, masked) + mu * commutativity_reg(fm);
}

struct MapGradient {
  Matrix C;
  /// Empty when P and Q are fixed.
  Matrix P;
  Matrix Q;
};

namespace detail {

inline double objective_and_gradient(const FunctionalMap& fm, const Matrix& reg_weights, double mu,
                                     const Observations& obs, DataTermEvaluator& eval, MapGradient* grad) {
  const Matrix A = fm.coefficients();
  Matrix grad_a;
  const double data = eval.evaluate(A, obs, grad ? &grad_a : nullptr);
  const double reg = (fm.C.array().square() * reg_weights.array()).sum();
  if (grad) {
    const Matrix reg_grad = 2.0 * mu * fm.C.cwiseProduct(reg_weights);
    if (fm.use_pq) {
      grad->C = fm.P.transpose() * grad_a * fm.Q + reg_grad;
      grad->P = grad_a * fm.Q * fm.C.transpose();
      grad->Q = grad_a.transpose() * fm.P * fm.C;
    } else {
      grad->C = grad_a + reg_grad;
      grad->P.resize(0, 0);
      grad->Q.resize(0, 0);
    }
  }
  return data + mu * reg;
}

}  // namespace detail

/// Analytic gradient of `objective` with respect to the free variables.
inline MapGradient gradient(const FunctionalMap& fm, const MaskedMatrix& masked, double mu) {
  detail::check_map(fm);
  detail::check_bases(fm.row_basis, fm.col_basis, masked.rows(), masked.cols(), "gradient");
  detail::DataTermEvaluator eval(fm.row_basis, fm.col_basis);
  MapGradient g;
  detail::objective_and_gradient(fm, detail::commutativity_weights(fm.row_basis, fm.col_basis), mu,
                                 Observations::from(masked), eval, &g);
  return g;
}

/// Observed entries partitioned into a training part and a validation part.
struct TrainValSplit {
  Observations train;
  Observations val;
};

/// Uniform seeded split of the observed entries; round(val_fraction * count)
/// entries go to validation, at least one stays in training.
inline TrainValSplit split_observations(const MaskedMatrix& masked, double val_fraction, std::uint64_t seed) {
  const Observations all = Observations::from(masked);
  if (all.size() == 0) throw DataError("fit: mask has no observed entries");
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(all.size())));
  n_val = std::min(n_val, all.size() - 1);
  std::vector<char> is_val(all.size(), 0);
  for (std::size_t t = 0; t < n_val; ++t) is_val[order[t]] = 1;

  TrainValSplit s;
  for (std::size_t e = 0; e < all.size(); ++e) {
    Observations& dst = is_val[e] ? s.val : s.train;
    dst.rows.push_back(all.rows[e]);
    dst.cols.push_back(all.cols[e]);
    dst.values.push_back(all.values[e]);
  }
  return s;
}

inline MaskedMatrix to_masked(const Observations& obs, Index m, Index n) {
  Matrix v = Matrix::Zero(m, n);
  Matrix s = Matrix::Zero(m, n);
  for (std::size_t e = 0; e < obs.size(); ++e) {
    v(obs.rows[e], obs.cols[e]) = obs.values[e];
    s(obs.rows[e], obs.cols[e]) = 1.0;
  }
  return MaskedMatrix(std::move(v), std::move(s));
}

struct FitResult {
  FunctionalMap map;
  ExperimentReport report;
};

namespace detail {

/// First/second-moment step state for one variable.
struct AdaptiveState {
  Matrix m;
  Matrix v;

  void step(Matrix& x, const Matrix& g, double lr, long t) {
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-12;
    if (m.size() == 0) {
      m = Matrix::Zero(x.rows(), x.cols());
      v = Matrix::Zero(x.rows(), x.cols());
    }
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    x.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

}  // namespace detail

/**
 * Minimizes the masked data term plus mu times the commutativity term.
 *
 * Observed entries are split (seeded) into train and validation parts; only
 * training entries enter the objective. Validation RMSE is checked every
 * `cfg.eval_every` iterations and the best iterate is returned; descent stops
 * after `cfg.patience` checks without improvement or at `cfg.max_iters`.
 * With no validation entries the best training objective is tracked instead.
 */
inline FitResult fit(const MaskedMatrix& masked, const SpectralBasis& row_basis,
                     const SpectralBasis& col_basis, const FitConfig& cfg) {
  cfg.validate();
  detail::check_bases(row_basis, col_basis, masked.rows(), masked.cols(), "fit");
  TrainValSplit split = split_observations(masked, cfg.val_fraction, cfg.seed);

  FunctionalMap fm = init_map(row_basis, col_basis, to_masked(split.train, masked.rows(), masked.cols()),
                              cfg.use_pq);
  const Matrix reg_weights = detail::commutativity_weights(row_basis, col_basis);
  detail::DataTermEvaluator eval(row_basis, col_basis);

  FitResult result;
  auto& report = result.report;
  report.config["mu"] = format_double(cfg.mu);
  report.config["learning_rate"] = format_double(cfg.learning_rate);
  report.config["optimizer"] = to_string(cfg.optimizer);
  report.config["max_iters"] = std::to_string(cfg.max_iters);
  report.config["eval_every"] = std::to_string(cfg.eval_every);
  report.config["patience"] = std::to_string(cfg.patience);
  report.config["val_fraction"] = format_double(cfg.val_fraction);
  report.config["use_pq"] = cfg.use_pq ? "true" : "false";
  report.config["seed"] = std::to_string(cfg.seed);
  report.config["k_rows"] = std::to_string(row_basis.dim());
  report.config["k_cols"] = std::to_string(col_basis.dim());

  const bool has_val = split.val.size() > 0;
  Matrix best_C = fm.C, best_P = fm.P, best_Q = fm.Q;
  double best_score = std::numeric_limits<double>::infinity();
  long best_iter = 0;
  long stale = 0;
  detail::AdaptiveState sc, sp, sq;
  MapGradient g;

  long iter = 0;
  for (;; ++iter) {
    const bool last = iter == cfg.max_iters;
    const double obj = detail::objective_and_gradient(fm, reg_weights, cfg.mu, split.train, eval,
                                                      last ? nullptr : &g);
    if (!std::isfinite(obj)) throw DivergenceError(iter);

    IterationRecord rec{iter, obj, std::nan("")};
    if (iter % cfg.eval_every == 0 || last) {
      const double score = has_val ? eval.rmse(fm.coefficients(), split.val) : obj;
      if (has_val) rec.val_rmse = score;
      if (score < best_score) {
        best_score = score;
        best_iter = iter;
        best_C = fm.C;
        best_P = fm.P;
        best_Q = fm.Q;
        stale = 0;
      } else if (++stale >= cfg.patience) {
        report.iterations.push_back(rec);
        break;
      }
    }
    report.iterations.push_back(rec);
    if (last) break;

    const double lr = cfg.learning_rate;
    if (cfg.optimizer == Optimizer::plain_gd) {
      fm.C -= lr * g.C;
      if (fm.use_pq) {
        fm.P -= lr * g.P;
        fm.Q -= lr * g.Q;
      }
    } else {
      sc.step(fm.C, g.C, lr, iter + 1);
      if (fm.use_pq) {
        sp.step(fm.P, g.P, lr, iter + 1);
        sq.step(fm.Q, g.Q, lr, iter + 1);
      }
    }
  }

  fm.C = best_C;
  fm.P = best_P;
  fm.Q = best_Q;
  const Matrix A = fm.coefficients();
  report.metrics["iterations"] = static_cast<double>(iter);
  report.metrics["best_iter"] = static_cast<double>(best_iter);
  report.metrics["train_rmse"] = eval.rmse(A, split.train);
  report.metrics["val_rmse"] = has_val ? eval.rmse(A, split.val) : std::nan("");
  report.metrics["train_objective"] =
      detail::objective_and_gradient(fm, reg_weights, cfg.mu, split.train, eval, nullptr);
  report.metrics["train_entries"] = static_cast<double>(split.train.size());
  report.metrics["val_entries"] = static_cast<double>(split.val.size());
  result.map = std::move(fm);
  return result;
}

struct ReductionResult {
  Matrix representation;
  FunctionalMap map;
  ExperimentReport report;
};

/// Fits a fully observed matrix and returns the reconstruction as a new,
/// rank <= min(k_r, k_c) representation of `data`.
inline ReductionResult reduce_dimension(const Matrix& data, const SpectralBasis& row_basis,
                                        const SpectralBasis& col_basis, const FitConfig& cfg) {
  if (!data.allFinite()) throw InvalidArgument("reduce_dimension: data contains non-finite entries");
  FitResult r = fit(MaskedMatrix::fully_observed(data), row_basis, col_basis, cfg);
  ReductionResult out;
  out.representation = reconstruct(r.map);
  out.map = std::move(r.map);
  out.report = std::move(r.report);
  return out;
}

}  // namespace fmgraph
