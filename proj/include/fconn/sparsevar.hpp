#pragma once

#include "fconn/types.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace fconn {

inline constexpr double kInfiniteWeight = std::numeric_limits<double>::infinity();

struct LassoConfig {
  // Explicit descending grid; when empty a grid of `grid_size` log-spaced
  // points from lambda_max down to grid_ratio * lambda_max is built per problem.
  std::vector<double> lambda_grid;
  int grid_size = 50;
  double grid_ratio = 1e-3;
  double tau = 1.0;  // adaptive weight exponent
  int max_iter = 10000;
  double tol = 1e-7;
  // Select one lambda for all equations (minimising the summed BIC) instead
  // of one per equation.
  bool shared_lambda = false;
};

// Quadratic form of the least-squares loss: with n observations,
//   (1/n)||y - Z b||^2 = yy - 2 c'b + b'G b,  G = Z'Z/n,  c = Z'y/n.
// Sharing G across the equations of a VAR avoids recomputing it.
struct LassoProblem {
  Matrix gram;
  Vector cross;
  double yy = 0.0;
  Eigen::Index n = 0;
  // Orthonormal basis of the null space of `gram` (p x m). Lagged PCA
  // residuals are exactly collinear, and the solver uses this to step along
  // the flat directions instead of crawling. Empty means "not computed".
  Matrix null_space;

  static LassoProblem from_data(const Vector& y, const Matrix& z);
  double mean_rss(const Vector& beta) const;
  void compute_null_space();
};

struct LassoSolution {
  Vector beta;
  int sweeps = 0;
};

// Largest lambda with a nonzero solution: max_i |2 c_i| / g_i over finite g_i.
double lambda_max(const LassoProblem& problem, const Vector& weights);

// `size` points from hi down to hi * ratio, equally spaced in log scale.
std::vector<double> log_grid(double hi, double ratio, int size);

// Solves (1/n)||y - Z b||^2 + lambda * sum_i g_i |b_i| by cyclic coordinate
// descent starting from `warm`. Infinite weights pin a coefficient at zero.
// Stops once the KKT violation is below 2 tol sqrt(max G_ii yy), i.e. `tol`
// is relative to the scale of the data.
// Throws ConvergenceError carrying lambda and the KKT violation.
// When `objective_trace` is given, the penalised objective after every sweep
// is appended to it.
LassoSolution lasso_solve(const LassoProblem& problem, const Vector& weights, double lambda, const Vector& warm,
                          int max_iter, double tol, std::vector<double>* objective_trace = nullptr);

double lasso_objective(const LassoProblem& problem, const Vector& weights, double lambda, const Vector& beta);

// Warm-started solutions down a descending grid.
std::vector<Vector> lasso_path(const Vector& y, const Matrix& z, const Vector& weights,
                               const std::vector<double>& lambda_grid, const LassoConfig& cfg = {});

// Largest KKT violation of `beta` for the weighted problem; zero at an exact
// minimiser.
double kkt_violation(const LassoProblem& problem, const Vector& weights, double lambda, const Vector& beta);

struct BicChoice {
  double lambda = 0.0;
  Vector beta;
  double bic = 0.0;
  std::vector<double> path_bic;  // aligned with the grid; +inf once saturated
};

// BIC(lambda) = log(RSS/n) + ||b||_0 log(n)/n. Ties go to the larger lambda.
// Fits with ||b||_0 >= n are saturated and scored +inf; the path stops there.
BicChoice bic_select(const LassoProblem& problem, const Vector& weights, const std::vector<double>& lambda_grid,
                     const LassoConfig& cfg = {});
BicChoice bic_select(const Vector& y, const Matrix& z, const Vector& weights, const std::vector<double>& lambda_grid,
                     const LassoConfig& cfg = {});

struct SparseVarFit {
  MatrixList coeffs;  // B(1)..B(p), each N x N
  Matrix residuals;   // (T - p) x N
  Matrix resid_cov;   // N x N
  std::vector<double> lambdas;

  int lags() const { return static_cast<int>(coeffs.size()); }
  Eigen::Index dim() const { return resid_cov.rows(); }
};

// Rows t = p..T-1 of [x_{t-1}, ..., x_{t-p}], lag-major columns.
Matrix lagged_regressors(const Matrix& x, int p);

// Residual panel v_t = x_t - sum_j B(j) x_{t-j} for t = p..T-1.
Matrix var_residuals(const Matrix& x, const MatrixList& coeffs);

// Per-equation adaptive LASSO: a plain LASSO first stage supplies weights
// g_i = |b_i|^-tau for the second stage, both tuned by BIC.
SparseVarFit fit_sparse_var(const Matrix& idio, int p, const LassoConfig& cfg = {});

// z (1 - |lambda/z|^nu)_+ elementwise; nu = infinity gives hard thresholding.
double threshold_value(double z, double lambda, double nu);
MatrixList threshold_coeffs(const MatrixList& coeffs, double lambda, double nu);

}  // namespace fconn
