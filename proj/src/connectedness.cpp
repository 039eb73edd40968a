#include "fconn/connectedness.hpp"

#include "fconn/csv.hpp"

#include <ostream>

namespace fconn {

MatrixList var_to_ma(const MatrixList& coeffs, int horizon, Eigen::Index dim) {
  if (horizon < 1) throw DomainError("var_to_ma: horizon must be >= 1");
  if (dim < 0) {
    if (coeffs.empty()) throw DomainError("var_to_ma: dimension unknown for an empty coefficient list");
    dim = coeffs.front().rows();
  }
  for (const auto& b : coeffs) {
    if (b.rows() != dim || b.cols() != dim) throw DomainError("var_to_ma: coefficient matrices must be square");
  }
  const int p = static_cast<int>(coeffs.size());
  MatrixList psi;
  psi.reserve(static_cast<std::size_t>(horizon));
  psi.push_back(Matrix::Identity(dim, dim));
  for (int h = 1; h < horizon; ++h) {
    Matrix next = Matrix::Zero(dim, dim);
    for (int j = 1; j <= std::min(h, p); ++j) {
      next.noalias() += coeffs[static_cast<std::size_t>(j - 1)] * psi[static_cast<std::size_t>(h - j)];
    }
    psi.push_back(std::move(next));
  }
  return psi;
}

Matrix companion_matrix(const MatrixList& coeffs) {
  if (coeffs.empty()) throw DomainError("companion_matrix: empty coefficient list");
  const Eigen::Index d = coeffs.front().rows();
  const Eigen::Index p = static_cast<Eigen::Index>(coeffs.size());
  Matrix c = Matrix::Zero(d * p, d * p);
  for (Eigen::Index j = 0; j < p; ++j) c.block(0, j * d, d, d) = coeffs[static_cast<std::size_t>(j)];
  if (p > 1) c.block(d, 0, d * (p - 1), d * (p - 1)).setIdentity();
  return c;
}

Matrix JointMaRepresentation::impulse_block(int h) const {
  const Eigen::Index r = factors();
  const Eigen::Index n = series();
  Matrix block(n, r + n);
  block.leftCols(r) = loadings * psi_f[static_cast<std::size_t>(h)];
  block.rightCols(n) = psi_xi[static_cast<std::size_t>(h)];
  return block;
}

Matrix block_diagonal(const Matrix& sigma_u, const Matrix& sigma_v) {
  const Eigen::Index r = sigma_u.rows();
  const Eigen::Index n = sigma_v.rows();
  Matrix s = Matrix::Zero(r + n, r + n);
  s.topLeftCorner(r, r) = sigma_u;
  s.bottomRightCorner(n, n) = sigma_v;
  return s;
}

JointMaRepresentation make_joint_ma(const Matrix& loadings, const MatrixList& factor_coeffs,
                                    const MatrixList& idio_coeffs, const Matrix& sigma_u, const Matrix& sigma_v,
                                    int horizon) {
  const Eigen::Index n = loadings.rows();
  const Eigen::Index r = loadings.cols();
  if (sigma_u.rows() != r || sigma_u.cols() != r || sigma_v.rows() != n || sigma_v.cols() != n) {
    throw DomainError("make_joint_ma: covariance dimensions do not match the loadings");
  }
  JointMaRepresentation rep;
  rep.horizon = horizon;
  rep.loadings = loadings;
  rep.psi_f = var_to_ma(factor_coeffs, horizon, r);
  rep.psi_xi = var_to_ma(idio_coeffs, horizon, n);
  rep.sigma_eta = block_diagonal(sigma_u, sigma_v);
  if (!rep.sigma_eta.allFinite() || !rep.loadings.allFinite()) throw DomainError("make_joint_ma: non-finite input");
  return rep;
}

Matrix girf(const JointMaRepresentation& rep, Eigen::Index shock) {
  const Eigen::Index k = rep.sigma_eta.rows();
  if (shock < 0 || shock >= k) throw DomainError("girf: shock index out of range");
  const double var = rep.sigma_eta(shock, shock);
  if (!(var > 0.0)) throw DomainError("girf: degenerate shock " + std::to_string(shock) + " with zero variance");
  const Vector impact = rep.sigma_eta.col(shock) / std::sqrt(var);
  Matrix out(rep.series(), rep.horizon);
  for (int h = 0; h < rep.horizon; ++h) out.col(h) = rep.impulse_block(h) * impact;
  return out;
}

Matrix gfevd(const JointMaRepresentation& rep) {
  const Eigen::Index n = rep.series();
  const Eigen::Index k = rep.sigma_eta.rows();
  Matrix numer = Matrix::Zero(n, k);
  Vector denom = Vector::Zero(n);
  for (int h = 0; h < rep.horizon; ++h) {
    const Matrix a = rep.impulse_block(h);
    const Matrix a_sigma = a * rep.sigma_eta;
    numer += a_sigma.cwiseAbs2();
    denom += (a_sigma.cwiseProduct(a)).rowwise().sum();
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(denom(i) > 0.0)) {
      throw EstimationError("gfevd: zero forecast error variance for series " + std::to_string(i));
    }
  }
  Matrix theta(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double sjj = rep.sigma_eta(j, j);
    if (sjj > 0.0) {
      theta.col(j) = numer.col(j).cwiseQuotient(denom) / sjj;
    } else {
      // A zero-variance innovation contributes nothing.
      theta.col(j).setZero();
    }
  }
  return theta;
}

ConnectednessTable connectedness_table(const Matrix& theta_g, int factors, int horizon) {
  const Eigen::Index n = theta_g.rows();
  const Eigen::Index r = factors;
  if (r < 0 || theta_g.cols() != r + n) throw DomainError("connectedness_table: theta must be N x (r+N)");
  if ((theta_g.array() < 0.0).any() || !theta_g.allFinite()) {
    throw DomainError("connectedness_table: theta must be finite and nonnegative");
  }
  ConnectednessTable t;
  t.horizon = horizon;
  t.factors = factors;
  t.theta = theta_g;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double total = theta_g.row(i).sum();
    if (!(total > 0.0)) throw DomainError("connectedness_table: zero row sum for series " + std::to_string(i));
    t.theta.row(i) /= total;
  }
  const double nn = static_cast<double>(n);
  t.from_degree = Vector::Zero(n);
  t.to_degree = Vector::Zero(n);
  double mkt = 0.0;
  double ids = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double row_mkt = t.theta.row(i).head(r).sum();
    double row_ids = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) row_ids += t.theta(i, r + j);
    }
    mkt += row_mkt;
    ids += row_ids;
    t.from_degree(i) = (row_mkt + row_ids) / nn;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i != j) s += t.theta(i, r + j);
    }
    t.to_degree(j) = s / nn;
  }
  t.swc_mkt = mkt / nn;
  t.swc_ids = ids / nn;
  t.swc = t.swc_mkt + t.swc_ids;
  return t;
}

void write_pairwise_csv(std::ostream& out, const ConnectednessTable& table, const std::vector<std::string>& names) {
  const Eigen::Index n = table.theta.rows();
  if (static_cast<Eigen::Index>(names.size()) != n) throw DomainError("write_pairwise_csv: name count mismatch");
  std::vector<std::string> fields{"target"};
  for (int k = 1; k <= table.factors; ++k) fields.push_back("factor_" + std::to_string(k));
  fields.insert(fields.end(), names.begin(), names.end());
  csv::write_record(out, fields);
  for (Eigen::Index i = 0; i < n; ++i) {
    fields.assign(1, names[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < table.theta.cols(); ++j) fields.push_back(csv::format_double(table.theta(i, j)));
    csv::write_record(out, fields);
  }
}

}  // namespace fconn
