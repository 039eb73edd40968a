#include "fconn/pipeline.hpp"

#include "fconn/ingest.hpp"

#include <spdlog/spdlog.h>

namespace fconn {

MatrixList plug_in_idio_ma(const Matrix& /*idio*/, const SparseVarFit& fit, int horizon) {
  return var_to_ma(fit.coeffs, horizon, fit.dim());
}

SpectralConnectedness estimate_spectral(const FactorModelFit& factor, const SparseVarFit& idio,
                                        const RegularizedPrecision& precision, const EstimationConfig& cfg) {
  const auto& sc = cfg.spectral;
  const auto bands = validate_partition(sc.bands);
  const auto grid = FrequencyGrid::aligned(sc.grid_size, bands);
  const double bandwidth = sc.bandwidth > 0.0 ? sc.bandwidth : default_bandwidth(factor.factors.rows());

  // The lag-window estimate is a density with a (2 pi)^-1 factor; the VAR
  // inverse spectrum is on the plain autocovariance Fourier-sum scale. Put
  // both on the latter before adding them.
  SpectralFn factor_fn = scale_spectrum(factor_spectrum_kernel(factor.factors, sc.kernel, bandwidth), 2.0 * kPi);
  const MatrixList thresholded = threshold_coeffs(idio.coeffs, sc.threshold, sc.threshold_exponent);
  int regularised = 0;
  SpectralFn idio_fn = invert_spectrum(idio_inverse_spectrum(thresholded, precision.precision), &regularised);
  const auto panel = evaluate(panel_spectrum(factor.loadings, factor_fn, idio_fn), grid);
  if (regularised > 0) {
    spdlog::warn("idiosyncratic spectrum: {} near-singular inversions regularised with 1e-10 I", regularised);
  }

  const auto rep = make_joint_ma(factor.loadings, factor.factor_var_coeffs, thresholded, factor.factor_resid_cov,
                                 precision.covariance, sc.ma_terms);
  const auto causation = causation_spectrum(rep, panel, grid);
  const auto fevd = band_fevd(causation, panel, grid, bands);
  return spectral_connectedness(fevd, bands, static_cast<int>(factor.loadings.cols()));
}

WindowEstimate estimate_window(const Matrix& x_raw, const ModelOrder& order, const EstimationConfig& cfg,
                               const EstimateOptions& opts) {
  const Matrix x = demean_columns(x_raw);
  WindowEstimate est;
  est.order = order;
  est.factor = fit_factor_model(x, order.r, order.p_f);
  est.idio = fit_sparse_var(est.factor.idio_panel, order.p_xi, cfg.lasso);

  const bool need_precision = opts.need_precision || cfg.spectral.enabled || cfg.regularized_time_domain;
  if (need_precision) {
    if (opts.fixed_rho) {
      est.precision = graphical_lasso(est.idio.resid_cov, *opts.fixed_rho, cfg.precision.glasso);
    } else {
      auto grid = cfg.precision.rho_grid;
      if (grid.empty()) grid = default_glasso_grid(est.idio.resid_cov, cfg.precision.grid_size, cfg.precision.grid_ratio);
      auto sel = select_glasso_penalty(est.idio.residuals, grid, cfg.precision.glasso);
      if (!sel.sparsity_monotone) spdlog::warn("graphical lasso: off-diagonal sparsity not monotone in rho on the grid");
      est.precision = std::move(sel.fit);
    }
  }

  const Matrix& sigma_v = cfg.regularized_time_domain ? est.precision->covariance : est.idio.resid_cov;
  auto rep = make_joint_ma(est.factor.loadings, est.factor.factor_var_coeffs, est.idio.coeffs,
                           est.factor.factor_resid_cov, sigma_v, cfg.horizon);
  if (cfg.idio_ma) {
    rep.psi_xi = cfg.idio_ma(est.factor.idio_panel, est.idio, cfg.horizon);
    if (static_cast<int>(rep.psi_xi.size()) != cfg.horizon) {
      throw EstimationError("idiosyncratic MA provider returned the wrong number of matrices");
    }
  }
  est.table = connectedness_table(gfevd(rep), order.r, cfg.horizon);

  if (cfg.spectral.enabled) est.spectral = estimate_spectral(est.factor, est.idio, *est.precision, cfg);
  return est;
}

std::vector<std::pair<std::string, double>> measures(const WindowEstimate& est) {
  std::vector<std::pair<std::string, double>> out{
      {"swc", est.table.swc}, {"swc_mkt", est.table.swc_mkt}, {"swc_ids", est.table.swc_ids}};
  if (est.spectral) {
    for (const auto& b : est.spectral->bands) {
      out.emplace_back("swc_band:" + b.name, b.swc);
      out.emplace_back("swc_mkt_band:" + b.name, b.swc_mkt);
      out.emplace_back("swc_ids_band:" + b.name, b.swc_ids);
    }
  }
  return out;
}

}  // namespace fconn
