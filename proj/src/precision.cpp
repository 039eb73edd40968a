#include "fconn/precision.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fconn {

namespace {

double soft(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

void check_input(const Matrix& s) {
  if (s.rows() != s.cols() || s.rows() < 1) throw DomainError("graphical_lasso: covariance must be square");
  if (!s.allFinite()) throw DomainError("graphical_lasso: non-finite covariance");
  const double scale = std::max(s.cwiseAbs().maxCoeff(), 1e-300);
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw DomainError("graphical_lasso: covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10 * scale) throw DomainError("graphical_lasso: covariance is not PSD");
  if ((s.diagonal().array() <= 0.0).any()) throw DomainError("graphical_lasso: zero variance on the diagonal");
}

// Theta from the column regressions: theta_jj = 1/(w_jj - w_12' b), theta_12 = -b theta_jj.
Matrix precision_from_betas(const Matrix& w, const Matrix& betas) {
  const Eigen::Index n = w.rows();
  Matrix theta = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double dot = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != j) dot += w(k, j) * betas(k, j);
    }
    const double tjj = 1.0 / (w(j, j) - dot);
    theta(j, j) = tjj;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != j) theta(k, j) = -betas(k, j) * tjj;
    }
  }
  return 0.5 * (theta + theta.transpose());
}

// Primal-dual gap -log det Theta + tr(S Theta) + rho ||Theta||_1,off - log det W - N
// for a working covariance W that is dual feasible (W_jj = S_jj,
// |W_ij - S_ij| <= rho). Nonnegative, and zero only at the optimum; infinite
// while either matrix is not positive definite.
double full_duality_gap(const Matrix& s, const Matrix& w, const Matrix& theta, double rho) {
  const Eigen::LLT<Matrix> lt(theta);
  const Eigen::LLT<Matrix> lw(w);
  if (lt.info() != Eigen::Success || lw.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const double logdet_t = 2.0 * lt.matrixLLT().diagonal().array().log().sum();
  const double logdet_w = 2.0 * lw.matrixLLT().diagonal().array().log().sum();
  const double off_l1 = theta.cwiseAbs().sum() - theta.diagonal().cwiseAbs().sum();
  return -logdet_t + s.cwiseProduct(theta).sum() + rho * off_l1 - logdet_w - static_cast<double>(s.rows());
}

}  // namespace

double glasso_duality_gap(const Matrix& sample_cov, const Matrix& precision, double rho) {
  const double off_l1 = precision.cwiseAbs().sum() - precision.diagonal().cwiseAbs().sum();
  return (sample_cov.cwiseProduct(precision)).sum() + rho * off_l1 - static_cast<double>(sample_cov.rows());
}

RegularizedPrecision graphical_lasso(const Matrix& sample_cov, double rho, const GlassoOptions& opts) {
  if (rho < 0.0) throw DomainError("graphical_lasso: negative penalty");
  check_input(sample_cov);
  const Matrix s = 0.5 * (sample_cov + sample_cov.transpose());
  const Eigen::Index n = s.rows();

  RegularizedPrecision out;
  out.penalty = rho;
  Matrix w = s;
  Matrix betas = Matrix::Zero(n, n);  // column j holds the regression of j on the rest
  Matrix theta = Matrix::Identity(n, n);

  if (n == 1) {
    out.precision = s.cwiseInverse();
    out.covariance = s;
    return out;
  }

  double gap = 0.0;
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    for (Eigen::Index j = 0; j < n; ++j) {
      // Lasso: min_b 1/2 b' W11 b - b' s12 + rho ||b||_1 with W11 = W minus row/col j.
      auto beta = betas.col(j);
      beta(j) = 0.0;
      Vector wb = w * beta;  // W11 b, maintained as b changes
      for (int inner = 0; inner < opts.inner_max_iter; ++inner) {
        double max_delta = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          if (k == j) continue;
          const double partial = s(k, j) - (wb(k) - w(k, k) * beta(k));
          const double next = soft(partial, rho) / w(k, k);
          const double delta = next - beta(k);
          if (delta != 0.0) {
            beta(k) = next;
            wb += w.col(k) * delta;
            max_delta = std::max(max_delta, std::abs(delta));
          }
        }
        if (max_delta < opts.inner_tol) break;
      }
      for (Eigen::Index k = 0; k < n; ++k) {
        if (k == j) continue;
        w(k, j) = wb(k);
        w(j, k) = wb(k);
      }
    }
    theta = precision_from_betas(w, betas);
    gap = full_duality_gap(s, w, theta, rho);
    out.iterations = iter;
    if (gap < opts.gap_tol) break;
  }
  out.duality_gap = gap;
  if (!(gap < opts.gap_tol)) {
    std::ostringstream msg;
    msg << "graphical_lasso did not converge (rho=" << rho << ", duality gap=" << gap << ")";
    throw ConvergenceError(msg.str(), rho, gap);
  }

  Eigen::LLT<Matrix> llt(theta);
  if (llt.info() != Eigen::Success) throw EstimationError("graphical_lasso: estimate is not positive definite");
  out.precision = theta;
  out.covariance = llt.solve(Matrix::Identity(n, n));
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

std::vector<double> default_glasso_grid(const Matrix& sample_cov, int size, double ratio) {
  double top = 0.0;
  for (Eigen::Index i = 0; i < sample_cov.rows(); ++i) {
    for (Eigen::Index j = 0; j < sample_cov.cols(); ++j) {
      if (i != j) top = std::max(top, std::abs(sample_cov(i, j)));
    }
  }
  if (!(top > 0.0)) return {0.0};
  std::vector<double> grid;
  for (int k = 0; k < size; ++k) {
    const double frac = size == 1 ? 0.0 : static_cast<double>(k) / (size - 1);
    grid.push_back(top * std::pow(ratio, frac));
  }
  return grid;
}

GlassoSelection select_glasso_penalty(const Matrix& residuals, std::vector<double> rho_grid,
                                      const GlassoOptions& opts) {
  const double n_obs = static_cast<double>(residuals.rows());
  if (residuals.rows() < 2) throw DomainError("select_glasso_penalty: need at least two residual rows");
  const Matrix s = residuals.transpose() * residuals / n_obs;
  if (rho_grid.empty()) rho_grid = default_glasso_grid(s);
  // Evaluate from the largest penalty down so ties resolve to the larger rho.
  std::sort(rho_grid.begin(), rho_grid.end(), std::greater<>());

  GlassoSelection sel;
  sel.grid = rho_grid;
  std::size_t best = 0;
  std::vector<RegularizedPrecision> fits;
  for (std::size_t k = 0; k < rho_grid.size(); ++k) {
    auto fit = graphical_lasso(s, rho_grid[k], opts);
    Eigen::LLT<Matrix> llt(fit.precision);
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    Eigen::Index nonzero = 0;
    for (Eigen::Index i = 0; i < fit.precision.rows(); ++i) {
      for (Eigen::Index j = 0; j < fit.precision.cols(); ++j) {
        if (i != j && fit.precision(i, j) != 0.0) ++nonzero;
      }
    }
    const double bic = -logdet + s.cwiseProduct(fit.precision).sum() +
                       0.5 * static_cast<double>(nonzero) * std::log(n_obs) / n_obs;
    if (!sel.off_diagonal_nonzeros.empty() && nonzero < sel.off_diagonal_nonzeros.back()) {
      sel.sparsity_monotone = false;
    }
    sel.off_diagonal_nonzeros.push_back(nonzero);
    sel.bic.push_back(bic);
    fits.push_back(std::move(fit));
    if (bic < sel.bic[best]) best = k;
  }
  sel.fit = std::move(fits[best]);
  return sel;
}

}  // namespace fconn
