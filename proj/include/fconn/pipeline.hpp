#pragma once

#include "fconn/connectedness.hpp"
#include "fconn/factor.hpp"
#include "fconn/precision.hpp"
#include "fconn/sparsevar.hpp"
#include "fconn/spectral.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fconn {

// Supplies the idiosyncratic MA matrices used in the FEVD. The default is the
// plug-in inversion of the fitted sparse VAR; a de-sparsified construction can
// be substituted here.
using IdioMaProvider = std::function<MatrixList(const Matrix& idio, const SparseVarFit& fit, int horizon)>;

MatrixList plug_in_idio_ma(const Matrix& idio, const SparseVarFit& fit, int horizon);

struct PrecisionOptions {
  std::vector<double> rho_grid;  // empty: default_glasso_grid
  int grid_size = 10;
  double grid_ratio = 0.05;
  GlassoOptions glasso;
};

struct SpectralOptions {
  bool enabled = true;
  std::vector<FrequencyBand> bands = default_daily_bands();
  int grid_size = 512;
  Kernel kernel = Kernel::Bartlett;
  double bandwidth = 0.0;  // 0: ceil(T^(1/3))
  int ma_terms = 100;
  double threshold = 0.0;
  double threshold_exponent = 1.0;
};

struct EstimationConfig {
  int horizon = 10;
  LassoConfig lasso;
  PrecisionOptions precision;
  SpectralOptions spectral;
  // Use the graphical-lasso covariance instead of the sample residual
  // covariance in the time-domain FEVD.
  bool regularized_time_domain = false;
  IdioMaProvider idio_ma;
};

struct WindowEstimate {
  ModelOrder order;
  FactorModelFit factor;
  SparseVarFit idio;
  std::optional<RegularizedPrecision> precision;
  ConnectednessTable table;
  std::optional<SpectralConnectedness> spectral;
  int regularised_inversions = 0;
};

struct EstimateOptions {
  bool need_precision = false;
  // Skip penalty selection and use this rho.
  std::optional<double> fixed_rho;
};

// Full estimation on one window: demean, PCA, factor VAR, sparse idiosyncratic
// VAR, optional regularised precision, time-domain table and (when enabled)
// frequency-band connectedness.
WindowEstimate estimate_window(const Matrix& x, const ModelOrder& order, const EstimationConfig& cfg,
                               const EstimateOptions& opts = {});

SpectralConnectedness estimate_spectral(const FactorModelFit& factor, const SparseVarFit& idio,
                                        const RegularizedPrecision& precision, const EstimationConfig& cfg);

// Named scalar measures of an estimate: swc, swc_mkt, swc_ids and, per band,
// swc_band:<name>, swc_mkt_band:<name>, swc_ids_band:<name>.
std::vector<std::pair<std::string, double>> measures(const WindowEstimate& est);

}  // namespace fconn
