#include "fconn/sparsevar.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cfloat>
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

struct PathResult {
  std::vector<Vector> betas;  // only the unsaturated prefix of the grid
  std::vector<double> bics;   // full grid length
};

Eigen::Index count_nonzero(const Vector& beta) { return (beta.array() != 0.0).count(); }

double bic_value(const LassoProblem& problem, const Vector& beta) {
  const double n = static_cast<double>(problem.n);
  const double floor = std::max(problem.yy * 1e-14, DBL_MIN);
  const double rss = std::max(problem.mean_rss(beta), floor);
  return std::log(rss) + static_cast<double>(count_nonzero(beta)) * std::log(n) / n;
}

PathResult path_with_bic(const LassoProblem& problem, const Vector& weights, const std::vector<double>& grid,
                         const LassoConfig& cfg) {
  PathResult out;
  out.bics.assign(grid.size(), std::numeric_limits<double>::infinity());
  Vector warm = Vector::Zero(problem.gram.rows());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    auto sol = lasso_solve(problem, weights, grid[k], warm, cfg.max_iter, cfg.tol);
    if (count_nonzero(sol.beta) >= problem.n) break;
    out.bics[k] = bic_value(problem, sol.beta);
    warm = sol.beta;
    out.betas.push_back(std::move(sol.beta));
  }
  return out;
}

std::vector<double> grid_for(const LassoConfig& cfg, double lam_max) {
  if (!cfg.lambda_grid.empty()) return cfg.lambda_grid;
  return log_grid(lam_max, cfg.grid_ratio, cfg.grid_size);
}

Vector adaptive_weights(const Vector& initial, double tau) {
  Vector g(initial.size());
  for (Eigen::Index i = 0; i < initial.size(); ++i) {
    g(i) = initial(i) == 0.0 ? kInfiniteWeight : std::pow(std::abs(initial(i)), -tau);
  }
  return g;
}

}  // namespace

LassoProblem LassoProblem::from_data(const Vector& y, const Matrix& z) {
  if (y.size() != z.rows()) throw DomainError("lasso: y and Z row counts differ");
  if (!z.allFinite() || !y.allFinite()) throw DomainError("lasso: non-finite data");
  LassoProblem p;
  p.n = z.rows();
  const double n = static_cast<double>(p.n);
  p.gram = z.transpose() * z / n;
  p.cross = z.transpose() * y / n;
  p.yy = y.squaredNorm() / n;
  p.compute_null_space();
  return p;
}

void LassoProblem::compute_null_space() {
  const Eigen::Index k = gram.rows();
  if (k == 0) {
    null_space = Matrix(0, 0);
    return;
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  const double cut = 1e-10 * std::max(es.eigenvalues().cwiseAbs().maxCoeff(), DBL_MIN);
  Eigen::Index m = 0;
  while (m < k && es.eigenvalues()(m) <= cut) ++m;
  null_space = es.eigenvectors().leftCols(m);
}

double LassoProblem::mean_rss(const Vector& beta) const {
  return yy - 2.0 * cross.dot(beta) + beta.dot(gram * beta);
}

double lambda_max(const LassoProblem& problem, const Vector& weights) {
  double out = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (std::isfinite(weights(i))) out = std::max(out, std::abs(2.0 * problem.cross(i)) / weights(i));
  }
  return out;
}

std::vector<double> log_grid(double hi, double ratio, int size) {
  if (!(hi > 0.0)) return {0.0};
  if (size < 1) throw DomainError("lambda grid size must be positive");
  std::vector<double> grid(static_cast<std::size_t>(size));
  if (size == 1) {
    grid[0] = hi;
    return grid;
  }
  const double lo = std::log(hi * ratio);
  const double top = std::log(hi);
  for (int k = 0; k < size; ++k) grid[static_cast<std::size_t>(k)] = std::exp(top + (lo - top) * k / (size - 1));
  grid[0] = hi;
  return grid;
}

double kkt_violation(const LassoProblem& problem, const Vector& weights, double lambda, const Vector& beta) {
  const Vector grad = 2.0 * (problem.cross - problem.gram * beta);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < beta.size(); ++i) {
    if (!std::isfinite(weights(i))) {
      worst = std::max(worst, beta(i) == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
      continue;
    }
    const double pen = lambda * weights(i);
    if (beta(i) != 0.0) {
      worst = std::max(worst, std::abs(grad(i) - pen * (beta(i) > 0 ? 1.0 : -1.0)));
    } else {
      worst = std::max(worst, std::abs(grad(i)) - pen);
    }
  }
  return std::max(worst, 0.0);
}

double lasso_objective(const LassoProblem& problem, const Vector& weights, double lambda, const Vector& beta) {
  double pen = 0.0;
  for (Eigen::Index i = 0; i < beta.size(); ++i) {
    if (beta(i) != 0.0) pen += weights(i) * std::abs(beta(i));
  }
  return problem.mean_rss(beta) + lambda * pen;
}

LassoSolution lasso_solve(const LassoProblem& problem, const Vector& weights, double lambda, const Vector& warm,
                          int max_iter, double tol, std::vector<double>* objective_trace) {
  const Eigen::Index p = problem.gram.rows();
  if (weights.size() != p || warm.size() != p) throw DomainError("lasso: weight/start dimension mismatch");
  if (lambda < 0.0) throw DomainError("lasso: negative lambda");
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!(weights(i) > 0.0) || std::isnan(weights(i))) throw DomainError("lasso: weights must be positive");
  }

  LassoSolution sol;
  sol.beta = warm;
  Vector grad = problem.cross - problem.gram * sol.beta;
  std::vector<char> fixed_zero(static_cast<std::size_t>(p), 0);
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!std::isfinite(weights(i)) || problem.gram(i, i) <= 0.0) {
      fixed_zero[static_cast<std::size_t>(i)] = 1;
      if (sol.beta(i) != 0.0) {
        grad += problem.gram.col(i) * sol.beta(i);
        sol.beta(i) = 0.0;
      }
    }
  }

  auto update = [&](Eigen::Index i) {
    const double gii = problem.gram(i, i);
    const double old = sol.beta(i);
    const double z = grad(i) + gii * old;
    const double next = soft(z, 0.5 * lambda * weights(i)) / gii;
    const double delta = next - old;
    if (delta != 0.0) {
      sol.beta(i) = next;
      grad -= problem.gram.col(i) * delta;
    }
    return std::abs(delta);
  };

  // Tolerances scale with the data: coefficient steps in units of
  // sqrt(yy / G_ii), gradients in units of sqrt(G_ii yy).
  const double gmax = p > 0 ? problem.gram.diagonal().maxCoeff() : 0.0;
  const double scale = std::sqrt(std::max(gmax, 0.0) * std::max(problem.yy, 0.0));
  const double kkt_tol = scale > 0.0 ? 2.0 * tol * scale : tol;
  const double step_tol = scale > 0.0 ? tol * std::sqrt(problem.yy / gmax) : tol;
  // Coordinate descent crawls along null directions of G, which lagged PCA
  // residuals always have: there only the penalty changes, and it decreases
  // linearly until some coefficient reaches zero. When the active-set
  // iterations stall, take that step directly: project the penalty gradient
  // onto the null vectors supported on the current support A (the smooth part
  // is flat along them because c lies in the range of G) and move until the
  // first coefficient hits zero, then repeat on the smaller support.
  constexpr int kNewtonRounds = 10;
  auto polish = [&](std::vector<Eigen::Index> support) {
    const Matrix& basis = problem.null_space;
    bool moved = false;
    std::vector<char> in_support(static_cast<std::size_t>(p));
    while (!support.empty() && basis.cols() > 0) {
      std::fill(in_support.begin(), in_support.end(), 0);
      for (Eigen::Index i : support) in_support[static_cast<std::size_t>(i)] = 1;
      Matrix outside(p - static_cast<Eigen::Index>(support.size()), basis.cols());
      for (Eigen::Index i = 0, row = 0; i < p; ++i) {
        if (!in_support[static_cast<std::size_t>(i)]) outside.row(row++) = basis.row(i);
      }
      // Combinations of null vectors vanishing off the support.
      Matrix combo;
      if (outside.rows() == 0) {
        combo = Matrix::Identity(basis.cols(), basis.cols());
      } else {
        const Eigen::JacobiSVD<Matrix> svd(outside, Eigen::ComputeFullV);
        const Vector& sv = svd.singularValues();
        Eigen::Index rank = 0;
        while (rank < sv.size() && sv(rank) > 1e-9) ++rank;
        combo = svd.matrixV().rightCols(basis.cols() - rank);
      }
      if (combo.cols() == 0) break;
      const Matrix dirs = basis * combo;
      Vector pen = Vector::Zero(p);
      for (Eigen::Index i : support) pen(i) = 0.5 * lambda * weights(i) * (sol.beta(i) > 0.0 ? 1.0 : -1.0);
      Vector dir = -(dirs * (dirs.transpose() * pen));
      for (Eigen::Index i = 0; i < p; ++i) {
        if (!in_support[static_cast<std::size_t>(i)]) dir(i) = 0.0;
      }
      if (dir.norm() <= 1e-12 * pen.norm()) break;
      double t = std::numeric_limits<double>::infinity();
      Eigen::Index hit = -1;
      for (Eigen::Index i : support) {
        if (dir(i) * sol.beta(i) < 0.0 && -sol.beta(i) / dir(i) < t) {
          t = -sol.beta(i) / dir(i);
          hit = i;
        }
      }
      if (hit < 0) break;
      Vector candidate = sol.beta + t * dir;
      candidate(hit) = 0.0;
      const double now = lasso_objective(problem, weights, lambda, sol.beta);
      if (lasso_objective(problem, weights, lambda, candidate) > now + 1e-15 * std::abs(now)) break;
      sol.beta = candidate;
      moved = true;
      support.erase(std::find(support.begin(), support.end(), hit));
    }
    // Ill-conditioned (rather than singular) supports: Newton steps on the
    // support with signs fixed, G_AA b = c_A - (lambda/2) g_A s_A. A step that
    // would flip a sign stops at zero and drops that coordinate. Coefficients
    // off the support are zero here, so G b restricted to A is G_AA b_A.
    for (int round = 0; round < kNewtonRounds && !support.empty(); ++round) {
      const auto k = static_cast<Eigen::Index>(support.size());
      Matrix g_aa(k, k);
      Vector b_a(k);
      Vector rhs(k);
      for (Eigen::Index a = 0; a < k; ++a) {
        const Eigen::Index i = support[static_cast<std::size_t>(a)];
        b_a(a) = sol.beta(i);
        rhs(a) = problem.cross(i) - 0.5 * lambda * weights(i) * (b_a(a) > 0.0 ? 1.0 : -1.0);
        for (Eigen::Index b = 0; b < k; ++b) g_aa(a, b) = problem.gram(i, support[static_cast<std::size_t>(b)]);
      }
      rhs.noalias() -= g_aa * b_a;
      const Vector step = Eigen::LDLT<Matrix>(g_aa).solve(rhs);
      if (!step.allFinite()) break;
      double t = 1.0;
      Eigen::Index hit = -1;
      for (Eigen::Index a = 0; a < k; ++a) {
        if (step(a) * b_a(a) < 0.0 && -b_a(a) / step(a) < t) {
          t = -b_a(a) / step(a);
          hit = a;
        }
      }
      Vector candidate = sol.beta;
      for (Eigen::Index a = 0; a < k; ++a) {
        candidate(support[static_cast<std::size_t>(a)]) = a == hit ? 0.0 : b_a(a) + t * step(a);
      }
      const double now = lasso_objective(problem, weights, lambda, sol.beta);
      if (lasso_objective(problem, weights, lambda, candidate) > now + 1e-15 * std::abs(now)) break;
      sol.beta = candidate;
      moved = true;
      if (hit < 0) break;
      support.erase(support.begin() + hit);
    }
    if (moved) {
      grad = problem.cross - problem.gram * sol.beta;
      if (objective_trace) objective_trace->push_back(lasso_objective(problem, weights, lambda, sol.beta));
    }
    return moved;
  };

  // Active-set iterations are declared stalled when the largest step has not
  // halved over kStallWindow sweeps, i.e. the linear rate is worse than ~0.93.
  constexpr int kStallWindow = 10;
  constexpr int kInnerCap = 1000;
  std::vector<Eigen::Index> active;
  while (true) {
    // Full sweep over every free coordinate, then iterate on the active set.
    // Convergence is judged by the optimality conditions after a full sweep:
    // on strongly correlated designs coordinates can keep creeping along a
    // nearly flat valley long after the objective has settled.
    active.clear();
    for (Eigen::Index i = 0; i < p; ++i) {
      if (fixed_zero[static_cast<std::size_t>(i)]) continue;
      update(i);
      if (sol.beta(i) != 0.0) active.push_back(i);
    }
    ++sol.sweeps;
    if (objective_trace) objective_trace->push_back(lasso_objective(problem, weights, lambda, sol.beta));
    if (kkt_violation(problem, weights, lambda, sol.beta) <= kkt_tol) break;
    bool settled = false;
    double reference = std::numeric_limits<double>::infinity();
    for (int inner_sweeps = 1; inner_sweeps <= kInnerCap && sol.sweeps < max_iter; ++inner_sweeps) {
      double inner = 0.0;
      for (Eigen::Index i : active) inner = std::max(inner, update(i));
      ++sol.sweeps;
      if (objective_trace) objective_trace->push_back(lasso_objective(problem, weights, lambda, sol.beta));
      if (inner < step_tol) {
        settled = true;
        break;
      }
      if (inner_sweeps % kStallWindow == 0) {
        if (inner > 0.5 * reference) break;
        reference = inner;
      }
    }
    if (!settled) polish(active);
    if (sol.sweeps >= max_iter) {
      const double kkt = kkt_violation(problem, weights, lambda, sol.beta);
      std::ostringstream msg;
      msg << "lasso did not converge in " << max_iter << " sweeps (lambda=" << lambda << ", KKT violation=" << kkt
          << ")";
      throw ConvergenceError(msg.str(), lambda, kkt);
    }
  }
  return sol;
}

std::vector<Vector> lasso_path(const Vector& y, const Matrix& z, const Vector& weights,
                               const std::vector<double>& lambda_grid, const LassoConfig& cfg) {
  const auto problem = LassoProblem::from_data(y, z);
  std::vector<Vector> out;
  out.reserve(lambda_grid.size());
  Vector warm = Vector::Zero(z.cols());
  for (double lambda : lambda_grid) {
    auto sol = lasso_solve(problem, weights, lambda, warm, cfg.max_iter, cfg.tol);
    warm = sol.beta;
    out.push_back(std::move(sol.beta));
  }
  return out;
}

BicChoice bic_select(const LassoProblem& problem, const Vector& weights, const std::vector<double>& lambda_grid,
                     const LassoConfig& cfg) {
  if (lambda_grid.empty()) throw DomainError("bic_select: empty lambda grid");
  auto path = path_with_bic(problem, weights, lambda_grid, cfg);
  BicChoice choice;
  choice.path_bic = path.bics;
  std::size_t best = 0;
  for (std::size_t k = 1; k < path.betas.size(); ++k) {
    if (path.bics[k] < path.bics[best]) best = k;
  }
  if (path.betas.empty()) {
    // Even the largest lambda saturates; only possible when n <= 0.
    throw EstimationError("bic_select: every fit on the grid is saturated");
  }
  choice.lambda = lambda_grid[best];
  choice.beta = path.betas[best];
  choice.bic = path.bics[best];
  return choice;
}

BicChoice bic_select(const Vector& y, const Matrix& z, const Vector& weights, const std::vector<double>& lambda_grid,
                     const LassoConfig& cfg) {
  return bic_select(LassoProblem::from_data(y, z), weights, lambda_grid, cfg);
}

Matrix lagged_regressors(const Matrix& x, int p) {
  const Eigen::Index t_len = x.rows();
  const Eigen::Index n = x.cols();
  if (p < 1 || t_len <= p) throw DomainError("lagged_regressors: need 1 <= p < T");
  Matrix z(t_len - p, n * p);
  for (int lag = 1; lag <= p; ++lag) {
    z.middleCols((lag - 1) * n, n) = x.middleRows(p - lag, t_len - p);
  }
  return z;
}

Matrix var_residuals(const Matrix& x, const MatrixList& coeffs) {
  const int p = static_cast<int>(coeffs.size());
  const Eigen::Index t_len = x.rows();
  Matrix v = x.bottomRows(t_len - p);
  for (int lag = 1; lag <= p; ++lag) {
    v.noalias() -= x.middleRows(p - lag, t_len - p) * coeffs[static_cast<std::size_t>(lag - 1)].transpose();
  }
  return v;
}

SparseVarFit fit_sparse_var(const Matrix& idio, int p, const LassoConfig& cfg) {
  const Eigen::Index t_len = idio.rows();
  const Eigen::Index n_series = idio.cols();
  if (p < 1) throw DomainError("fit_sparse_var: lag order must be >= 1");
  if (t_len <= p + 1) throw DomainError("fit_sparse_var: need T > p + 1");
  if (!idio.allFinite()) throw DomainError("fit_sparse_var: non-finite data");

  const Matrix z = lagged_regressors(idio, p);
  const Eigen::Index n_obs = z.rows();
  const Eigen::Index n_reg = z.cols();
  LassoProblem base;
  base.n = n_obs;
  base.gram = z.transpose() * z / static_cast<double>(n_obs);
  base.compute_null_space();
  const Matrix cross_all = z.transpose() * idio.bottomRows(n_obs) / static_cast<double>(n_obs);

  std::vector<LassoProblem> problems(static_cast<std::size_t>(n_series));
  for (Eigen::Index j = 0; j < n_series; ++j) {
    auto& prob = problems[static_cast<std::size_t>(j)];
    prob.n = n_obs;
    prob.gram = base.gram;
    prob.null_space = base.null_space;
    prob.cross = cross_all.col(j);
    prob.yy = idio.col(j).tail(n_obs).squaredNorm() / static_cast<double>(n_obs);
  }

  Matrix rows = Matrix::Zero(n_series, n_reg);
  std::vector<double> lambdas(static_cast<std::size_t>(n_series), 0.0);
  const Vector ones = Vector::Ones(n_reg);

  if (!cfg.shared_lambda) {
    for (Eigen::Index j = 0; j < n_series; ++j) {
      const auto& prob = problems[static_cast<std::size_t>(j)];
      const auto first = bic_select(prob, ones, grid_for(cfg, lambda_max(prob, ones)), cfg);
      const Vector g = adaptive_weights(first.beta, cfg.tau);
      if (first.beta.isZero(0.0)) {
        lambdas[static_cast<std::size_t>(j)] = first.lambda;
        continue;
      }
      const auto second = bic_select(prob, g, grid_for(cfg, lambda_max(prob, g)), cfg);
      rows.row(j) = second.beta.transpose();
      lambdas[static_cast<std::size_t>(j)] = second.lambda;
    }
  } else {
    // One grid for every equation; the lambda minimising the summed BIC wins.
    auto shared_stage = [&](const std::vector<Vector>& weights) {
      double top = 0.0;
      for (std::size_t j = 0; j < problems.size(); ++j) top = std::max(top, lambda_max(problems[j], weights[j]));
      const auto grid = grid_for(cfg, top);
      std::vector<PathResult> paths;
      std::vector<double> total(grid.size(), 0.0);
      for (std::size_t j = 0; j < problems.size(); ++j) {
        if (weights[j].array().isInf().all()) {
          paths.push_back({});
          continue;
        }
        paths.push_back(path_with_bic(problems[j], weights[j], grid, cfg));
        for (std::size_t k = 0; k < grid.size(); ++k) total[k] += paths.back().bics[k];
      }
      std::size_t best = 0;
      for (std::size_t k = 1; k < grid.size(); ++k) {
        if (total[k] < total[best]) best = k;
      }
      std::vector<Vector> betas;
      for (std::size_t j = 0; j < problems.size(); ++j) {
        if (paths[j].betas.size() > best) {
          betas.push_back(paths[j].betas[best]);
        } else {
          betas.push_back(Vector::Zero(n_reg));
        }
      }
      return std::make_pair(grid[best], betas);
    };
    const auto [lam1, first] = shared_stage(std::vector<Vector>(problems.size(), ones));
    std::vector<Vector> g;
    for (const auto& b : first) g.push_back(adaptive_weights(b, cfg.tau));
    const auto [lam2, second] = shared_stage(g);
    for (Eigen::Index j = 0; j < n_series; ++j) {
      rows.row(j) = second[static_cast<std::size_t>(j)].transpose();
      lambdas[static_cast<std::size_t>(j)] = first[static_cast<std::size_t>(j)].isZero(0.0) ? lam1 : lam2;
    }
  }

  SparseVarFit fit;
  for (int lag = 0; lag < p; ++lag) fit.coeffs.push_back(rows.middleCols(lag * n_series, n_series));
  fit.residuals = var_residuals(idio, fit.coeffs);
  fit.resid_cov = fit.residuals.transpose() * fit.residuals / static_cast<double>(n_obs);
  fit.lambdas = std::move(lambdas);
  return fit;
}

double threshold_value(double z, double lambda, double nu) {
  if (z == 0.0 || lambda == 0.0) return z;
  const double ratio = std::abs(lambda / z);
  if (std::isinf(nu)) return ratio < 1.0 ? z : 0.0;
  return z * std::max(0.0, 1.0 - std::pow(ratio, nu));
}

MatrixList threshold_coeffs(const MatrixList& coeffs, double lambda, double nu) {
  if (lambda < 0.0) throw DomainError("threshold_coeffs: negative threshold");
  if (!(nu >= 1.0)) throw DomainError("threshold_coeffs: exponent must be >= 1");
  MatrixList out;
  out.reserve(coeffs.size());
  for (const auto& b : coeffs) out.push_back(b.unaryExpr([&](double z) { return threshold_value(z, lambda, nu); }));
  return out;
}

}  // namespace fconn
