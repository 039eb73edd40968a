#pragma once

#include "fconn/sparsevar.hpp"
#include "fconn/types.hpp"

#include <vector>

namespace fconn {

struct PcaFactors {
  Matrix loadings;          // N x r
  Matrix factors;           // T x r, F'F/T = I
  Matrix idio;              // T x N, X - F L'
  Vector singular_values;   // all singular values of X/sqrt(NT), descending
};

// Principal-component estimate of an approximate static factor model on a
// demeaned T x N panel. Each loading column is signed so that its entry of
// largest magnitude is positive.
PcaFactors pca_factors(const Matrix& x, int r);

struct VarFit {
  MatrixList coeffs;  // D(1)..D(p)
  Matrix residuals;   // (T - p) x r
  Matrix resid_cov;   // residual second moment over t = p+1..T
};

// Multivariate least squares of f_t on (f_{t-1}, ..., f_{t-p}), no intercept.
VarFit fit_factor_var(const Matrix& factors, int p);

struct ModelOrder {
  int r = 1;
  int p_f = 1;
  int p_xi = 1;

  auto operator<=>(const ModelOrder&) const = default;
};

struct FactorModelFit {
  Matrix loadings;
  Matrix factors;
  MatrixList factor_var_coeffs;
  Matrix factor_resid_cov;
  Matrix idio_panel;
};

FactorModelFit fit_factor_model(const Matrix& x, int r, int p_f);

struct OrderBounds {
  int r_max = 5;
  int pf_max = 4;
  int pxi_max = 6;
};

struct OrderCandidate {
  ModelOrder order;
  double criterion = 0.0;
};

struct OrderSelection {
  ModelOrder best;
  std::vector<OrderCandidate> candidates;  // lexicographic order
};

// Averaged per-series criterion for one candidate order, given the fits.
double joint_information_criterion(const Matrix& x, const FactorModelFit& factor_fit, const SparseVarFit& idio_fit);

// Exhaustive search of the joint extended information criterion over
// 1..r_max x 1..pf_max x 1..pxi_max (r capped at min(N, T)).
OrderSelection select_model_order(const Matrix& x, const OrderBounds& bounds, const LassoConfig& lasso = {});

}  // namespace fconn
