#pragma once

#include "fconn/types.hpp"

#include <vector>

namespace fconn {

struct RegularizedPrecision {
  Matrix precision;   // symmetric positive definite
  Matrix covariance;  // precision^-1
  double penalty = 0.0;
  double duality_gap = 0.0;
  int iterations = 0;
};

struct GlassoOptions {
  double gap_tol = 1e-6;
  int max_iter = 1000;
  double inner_tol = 1e-12;
  int inner_max_iter = 10000;
};

// Maximises log det(Theta) - tr(S Theta) - rho * sum_{i != j} |Theta_ij| by
// block coordinate descent on the working covariance. The diagonal is not
// penalised.
RegularizedPrecision graphical_lasso(const Matrix& sample_cov, double rho, const GlassoOptions& opts = {});

// tr(S Theta) + rho ||Theta||_1,off - N: the duality gap when the working
// covariance equals Theta^-1.
double glasso_duality_gap(const Matrix& sample_cov, const Matrix& precision, double rho);

// Log-spaced grid from the largest off-diagonal |S_ij| down to ratio times it.
std::vector<double> default_glasso_grid(const Matrix& sample_cov, int size = 10, double ratio = 0.05);

struct GlassoSelection {
  RegularizedPrecision fit;
  std::vector<double> grid;
  std::vector<double> bic;
  std::vector<Eigen::Index> off_diagonal_nonzeros;
  // Sparsity was nondecreasing in rho along the grid.
  bool sparsity_monotone = true;
};

// Picks rho by the Gaussian BIC
//   -log det Theta + tr(S Theta) + (||Theta||_0,off / 2) log(n) / n,
// with S the second-moment matrix of the residual rows. Ties go to the larger
// rho. An empty grid is replaced by default_glasso_grid(S).
GlassoSelection select_glasso_penalty(const Matrix& residuals, std::vector<double> rho_grid,
                                      const GlassoOptions& opts = {});

}  // namespace fconn
