#pragma once

#include "fconn/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace fconn {

// MA coefficients Psi(0..horizon-1) of a VAR with lag matrices `coeffs`:
// Psi(0) = I, Psi(h) = sum_{j=1}^{min(h,p)} B(j) Psi(h-j). `dim` is needed
// only when `coeffs` is empty.
MatrixList var_to_ma(const MatrixList& coeffs, int horizon, Eigen::Index dim = -1);

// Stacked companion matrix of a VAR(p).
Matrix companion_matrix(const MatrixList& coeffs);

// Joint moving-average representation of x_t = L f_t + xi_t with the factor
// and idiosyncratic VARs driven by eta_t = (u_t', v_t')'.
struct JointMaRepresentation {
  int horizon = 0;
  MatrixList psi_f;   // r x r
  MatrixList psi_xi;  // N x N
  Matrix loadings;    // N x r
  Matrix sigma_eta;   // (r+N) x (r+N), block diagonal

  Eigen::Index factors() const { return loadings.cols(); }
  Eigen::Index series() const { return loadings.rows(); }
  // (L Psi_f(h) | Psi_xi(h)), N x (r+N).
  Matrix impulse_block(int h) const;
};

// Block-diagonal diag(sigma_u, sigma_v).
Matrix block_diagonal(const Matrix& sigma_u, const Matrix& sigma_v);

JointMaRepresentation make_joint_ma(const Matrix& loadings, const MatrixList& factor_coeffs,
                                    const MatrixList& idio_coeffs, const Matrix& sigma_u, const Matrix& sigma_v,
                                    int horizon);

// Generalised impulse responses to a one-standard-deviation shock in
// innovation `shock` (0-based over the r+N innovations); N x horizon.
Matrix girf(const JointMaRepresentation& rep, Eigen::Index shock);

// Generalised forecast error variance decomposition, N x (r+N), summing the
// first `rep.horizon` MA terms.
Matrix gfevd(const JointMaRepresentation& rep);

struct ConnectednessTable {
  Matrix theta;  // N x (r+N) row-normalised shares
  int horizon = 0;
  int factors = 0;
  double swc = 0.0;
  double swc_mkt = 0.0;
  double swc_ids = 0.0;
  Vector from_degree;  // C_{i <- All}: everything except own idiosyncratic shock, / N
  Vector to_degree;    // C_{All <- i}: idiosyncratic shock i into other series, / N
};

ConnectednessTable connectedness_table(const Matrix& theta_g, int factors, int horizon = 0);

// Pairwise CSV: one row per target series, columns factor_1..factor_r then
// series names.
void write_pairwise_csv(std::ostream& out, const ConnectednessTable& table, const std::vector<std::string>& names);

}  // namespace fconn
