#pragma once
// Test-side helpers: simulation of known factor/VAR systems and a direct
// element-by-element variance decomposition used as an oracle. Nothing here
// calls into the estimation code.

#include "fconn/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

namespace testsupport {

using fconn::Matrix;
using fconn::MatrixList;
using fconn::Vector;

inline Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> nd(0.0, sd);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = nd(rng);
  }
  return m;
}

inline double spectral_radius_of_companion(const MatrixList& coeffs) {
  const Eigen::Index d = coeffs.front().rows();
  const Eigen::Index p = static_cast<Eigen::Index>(coeffs.size());
  Matrix c = Matrix::Zero(d * p, d * p);
  for (Eigen::Index j = 0; j < p; ++j) c.block(0, j * d, d, d) = coeffs[static_cast<std::size_t>(j)];
  if (p > 1) c.block(d, 0, d * (p - 1), d * (p - 1)).setIdentity();
  return Eigen::EigenSolver<Matrix>(c, false).eigenvalues().cwiseAbs().maxCoeff();
}

// Random VAR(p) rescaled so that its companion spectral radius equals `radius`.
inline MatrixList random_stable_var(Eigen::Index d, int p, double radius, std::mt19937_64& rng) {
  MatrixList coeffs;
  for (int j = 0; j < p; ++j) coeffs.push_back(normal_matrix(d, d, rng, 1.0 / std::sqrt(double(d))));
  // Scaling lag j by s^j scales every companion eigenvalue by s.
  const double s = radius / spectral_radius_of_companion(coeffs);
  double sj = 1.0;
  for (auto& b : coeffs) {
    sj *= s;
    b *= sj;
  }
  return coeffs;
}

inline Matrix random_spd(Eigen::Index d, std::mt19937_64& rng, double ridge = 0.5) {
  const Matrix a = normal_matrix(d, d, rng);
  return a * a.transpose() / double(d) + ridge * Matrix::Identity(d, d);
}

// x_t = L f_t + xi_t, f and xi VARs driven by independent Gaussian u and v.
struct Dgp {
  Matrix loadings;  // N x r
  MatrixList d;     // factor VAR
  MatrixList b;     // idiosyncratic VAR
  Matrix sigma_u;
  Matrix sigma_v;

  Eigen::Index n() const { return loadings.rows(); }
  Eigen::Index r() const { return loadings.cols(); }
};

inline Matrix simulate_var(const MatrixList& coeffs, const Matrix& sigma, int t_len, int burn, std::mt19937_64& rng) {
  const Eigen::Index d = sigma.rows();
  const Matrix chol = Eigen::LLT<Matrix>(sigma).matrixL();
  const int total = t_len + burn;
  Matrix y = Matrix::Zero(total, d);
  std::normal_distribution<double> nd;
  Vector z(d);
  for (int t = 0; t < total; ++t) {
    for (Eigen::Index i = 0; i < d; ++i) z(i) = nd(rng);
    Vector yt = chol * z;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      const int lag = static_cast<int>(j) + 1;
      if (t - lag >= 0) yt += coeffs[j] * y.row(t - lag).transpose();
    }
    y.row(t) = yt.transpose();
  }
  return y.bottomRows(t_len);
}

inline Matrix simulate(const Dgp& g, int t_len, std::mt19937_64& rng, int burn = 300) {
  const Matrix f = simulate_var(g.d, g.sigma_u, t_len, burn, rng);
  const Matrix xi = simulate_var(g.b, g.sigma_v, t_len, burn, rng);
  return f * g.loadings.transpose() + xi;
}

// Psi(h) by the defining recursion, written independently of the library.
inline MatrixList ma_terms(const MatrixList& coeffs, Eigen::Index d, int horizon) {
  MatrixList psi;
  for (int h = 0; h < horizon; ++h) {
    Matrix m = Matrix::Zero(d, d);
    if (h == 0) m.setIdentity();
    for (int j = 1; j <= static_cast<int>(coeffs.size()) && j <= h; ++j) {
      m += coeffs[static_cast<std::size_t>(j - 1)] * psi[static_cast<std::size_t>(h - j)];
    }
    psi.push_back(m);
  }
  return psi;
}

// Row-normalised generalised FEVD, N x (r+N), evaluated entry by entry.
inline Matrix direct_gfevd(const Dgp& g, int horizon) {
  const Eigen::Index n = g.n();
  const Eigen::Index r = g.r();
  const auto psi_f = ma_terms(g.d, r, horizon);
  const auto psi_x = ma_terms(g.b, n, horizon);
  Matrix sigma = Matrix::Zero(r + n, r + n);
  sigma.topLeftCorner(r, r) = g.sigma_u;
  sigma.bottomRightCorner(n, n) = g.sigma_v;
  Matrix theta = Matrix::Zero(n, r + n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double denom = 0.0;
    for (int h = 0; h < horizon; ++h) {
      Matrix phi(n, r + n);
      phi << g.loadings * psi_f[static_cast<std::size_t>(h)], psi_x[static_cast<std::size_t>(h)];
      const Vector row = phi.row(i).transpose();
      denom += row.dot(sigma * row);
      for (Eigen::Index j = 0; j < r + n; ++j) {
        const double v = row.dot(sigma.col(j));
        theta(i, j) += v * v / sigma(j, j);
      }
    }
    theta.row(i) /= denom;
  }
  for (Eigen::Index i = 0; i < n; ++i) theta.row(i) /= theta.row(i).sum();
  return theta;
}

struct Aggregates {
  double swc = 0.0;
  double mkt = 0.0;
  double ids = 0.0;
};

inline Aggregates direct_aggregates(const Matrix& table, Eigen::Index r) {
  const Eigen::Index n = table.rows();
  Aggregates a;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < table.cols(); ++j) {
      if (j < r) {
        a.mkt += table(i, j);
      } else if (j - r != i) {
        a.ids += table(i, j);
      }
    }
  }
  a.mkt /= double(n);
  a.ids /= double(n);
  a.swc = a.mkt + a.ids;
  return a;
}

// One strong factor with AR(2) dynamics, sparse diagonal-plus-neighbour
// idiosyncratic VAR(1), used by the Monte Carlo studies.
inline Dgp one_factor_dgp(Eigen::Index n, std::mt19937_64& rng) {
  Dgp g;
  std::uniform_real_distribution<double> load(0.5, 1.5);
  g.loadings = Matrix(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) g.loadings(i, 0) = load(rng);
  g.d = {Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 0.2)};
  Matrix b = 0.4 * Matrix::Identity(n, n);
  for (Eigen::Index i = 0; i + 1 < n; i += 2) b(i, i + 1) = 0.2;
  g.b = {b};
  g.sigma_u = Matrix::Identity(1, 1);
  g.sigma_v = Matrix::Identity(n, n);
  for (Eigen::Index i = 0; i + 1 < n; i += 2) g.sigma_v(i, i + 1) = g.sigma_v(i + 1, i) = 0.3;
  return g;
}

}  // namespace testsupport
