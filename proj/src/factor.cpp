#include "fconn/factor.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <map>

namespace fconn {

PcaFactors pca_factors(const Matrix& x, int r) {
  const Eigen::Index t_len = x.rows();
  const Eigen::Index n = x.cols();
  if (r < 1 || r > std::min(t_len, n)) {
    throw DomainError("pca_factors: r=" + std::to_string(r) + " outside [1, min(N,T)=" +
                      std::to_string(std::min(t_len, n)) + "]");
  }
  if (!x.allFinite()) throw DomainError("pca_factors: non-finite entries");

  const double scale = std::sqrt(static_cast<double>(n) * static_cast<double>(t_len));
  Eigen::BDCSVD<Matrix> svd(x / scale, Eigen::ComputeThinU | Eigen::ComputeThinV);

  PcaFactors out;
  out.singular_values = svd.singularValues();
  Matrix u = svd.matrixU().leftCols(r);
  Matrix v = svd.matrixV().leftCols(r);
  for (int k = 0; k < r; ++k) {
    Eigen::Index arg = 0;
    v.col(k).cwiseAbs().maxCoeff(&arg);
    if (v(arg, k) < 0.0) {
      v.col(k) = -v.col(k);
      u.col(k) = -u.col(k);
    }
  }
  out.factors = std::sqrt(static_cast<double>(t_len)) * u;
  out.loadings = std::sqrt(static_cast<double>(n)) * v * out.singular_values.head(r).asDiagonal();
  out.idio = x - out.factors * out.loadings.transpose();
  return out;
}

VarFit fit_factor_var(const Matrix& factors, int p) {
  const Eigen::Index t_len = factors.rows();
  const Eigen::Index r = factors.cols();
  if (p < 1) throw DomainError("fit_factor_var: lag order must be >= 1");
  if (t_len <= r * p || t_len <= p) throw DomainError("fit_factor_var: need T > r * p_f");

  const Matrix z = lagged_regressors(factors, p);
  const Matrix y = factors.bottomRows(t_len - p);
  Eigen::ColPivHouseholderQR<Matrix> qr(z);
  if (qr.rank() < z.cols()) throw EstimationError("fit_factor_var: singular regressor Gram matrix");
  const Matrix coef = qr.solve(y);  // (r p) x r

  VarFit fit;
  for (int lag = 0; lag < p; ++lag) fit.coeffs.push_back(coef.middleRows(lag * r, r).transpose());
  fit.residuals = y - z * coef;
  fit.resid_cov = fit.residuals.transpose() * fit.residuals / static_cast<double>(y.rows());
  fit.resid_cov = 0.5 * (fit.resid_cov + fit.resid_cov.transpose()).eval();
  return fit;
}

FactorModelFit fit_factor_model(const Matrix& x, int r, int p_f) {
  auto pca = pca_factors(x, r);
  auto var = fit_factor_var(pca.factors, p_f);
  FactorModelFit fit;
  fit.loadings = std::move(pca.loadings);
  fit.factors = std::move(pca.factors);
  fit.factor_var_coeffs = std::move(var.coeffs);
  fit.factor_resid_cov = std::move(var.resid_cov);
  fit.idio_panel = std::move(pca.idio);
  return fit;
}

namespace {

double criterion_from_residuals(const Matrix& x, const FactorModelFit& ff, const SparseVarFit& sv, Eigen::Index start) {
  const Eigen::Index t_len = x.rows();
  const Eigen::Index n = x.cols();
  const int p_f = static_cast<int>(ff.factor_var_coeffs.size());
  const int p_xi = sv.lags();
  const Eigen::Index r = ff.loadings.cols();
  if (start < std::max(p_f, p_xi) || start >= t_len) throw DomainError("information criterion: bad sample start");

  const Eigen::Index len = t_len - start;
  Matrix fitted = Matrix::Zero(len, n);
  Matrix common = Matrix::Zero(len, r);
  for (int j = 1; j <= p_f; ++j) {
    common.noalias() += ff.factors.middleRows(start - j, len) * ff.factor_var_coeffs[static_cast<std::size_t>(j - 1)].transpose();
  }
  fitted.noalias() += common * ff.loadings.transpose();
  for (int j = 1; j <= p_xi; ++j) {
    fitted.noalias() += ff.idio_panel.middleRows(start - j, len) * sv.coeffs[static_cast<std::size_t>(j - 1)].transpose();
  }
  const Matrix resid = x.bottomRows(len) - fitted;

  const double t = static_cast<double>(t_len);
  const double nn = static_cast<double>(n);
  const double c_t = 0.5 * std::log(nn * t / (nn + t)) / std::log(t);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double nonzero = 0.0;
    for (const auto& b : sv.coeffs) nonzero += static_cast<double>((b.row(i).array() != 0.0).count());
    const double pen = (static_cast<double>(r * p_f) + nonzero) * std::log(t) / t * c_t;
    const double mse = std::max(resid.col(i).squaredNorm() / static_cast<double>(len), DBL_MIN);
    total += std::log(mse) + pen;
  }
  return total / nn;
}

}  // namespace

double joint_information_criterion(const Matrix& x, const FactorModelFit& factor_fit, const SparseVarFit& idio_fit) {
  const Eigen::Index start = std::max<Eigen::Index>(static_cast<Eigen::Index>(factor_fit.factor_var_coeffs.size()),
                                                    idio_fit.lags());
  return criterion_from_residuals(x, factor_fit, idio_fit, start);
}

OrderSelection select_model_order(const Matrix& x, const OrderBounds& bounds, const LassoConfig& lasso) {
  if (bounds.r_max < 1 || bounds.pf_max < 1 || bounds.pxi_max < 1) {
    throw DomainError("select_model_order: empty search grid");
  }
  const Eigen::Index t_len = x.rows();
  const int r_cap = static_cast<int>(std::min<Eigen::Index>(bounds.r_max, std::min(x.rows(), x.cols())));
  const Eigen::Index start = std::max(bounds.pf_max, bounds.pxi_max);
  if (start + 2 > t_len) throw DomainError("select_model_order: panel too short for the lag bounds");

  OrderSelection sel;
  for (int r = 1; r <= r_cap; ++r) {
    auto pca = pca_factors(x, r);
    std::map<int, SparseVarFit> idio_fits;
    for (int p_xi = 1; p_xi <= bounds.pxi_max; ++p_xi) idio_fits.emplace(p_xi, fit_sparse_var(pca.idio, p_xi, lasso));
    for (int p_f = 1; p_f <= bounds.pf_max; ++p_f) {
      FactorModelFit ff;
      try {
        auto var = fit_factor_var(pca.factors, p_f);
        ff.loadings = pca.loadings;
        ff.factors = pca.factors;
        ff.factor_var_coeffs = std::move(var.coeffs);
        ff.factor_resid_cov = std::move(var.resid_cov);
        ff.idio_panel = pca.idio;
      } catch (const EstimationError&) {
        continue;
      } catch (const DomainError&) {
        continue;
      }
      for (int p_xi = 1; p_xi <= bounds.pxi_max; ++p_xi) {
        const double ic = criterion_from_residuals(x, ff, idio_fits.at(p_xi), start);
        sel.candidates.push_back({ModelOrder{r, p_f, p_xi}, ic});
      }
    }
  }
  if (sel.candidates.empty()) throw EstimationError("select_model_order: no candidate could be fitted");
  std::sort(sel.candidates.begin(), sel.candidates.end(),
            [](const OrderCandidate& a, const OrderCandidate& b) { return a.order < b.order; });
  const OrderCandidate* best = &sel.candidates.front();
  for (const auto& c : sel.candidates) {
    if (c.criterion < best->criterion) best = &c;
  }
  sel.best = best->order;
  return sel;
}

}  // namespace fconn
