#pragma once

#include "fconn/connectedness.hpp"
#include "fconn/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fconn {

// Frequency band (lo, hi] in radians, 0 <= lo < hi <= pi.
struct FrequencyBand {
  std::string name;
  double lo = 0.0;
  double hi = kPi;

  bool contains(double omega) const { return lo < omega && omega <= hi; }
};

// Monthly: periods up to 20 days; Quarterly: 20 to 60 days; Yearly: longer.
std::vector<FrequencyBand> default_daily_bands();

// Bands sorted by lower edge; throws DomainError naming the offending pair
// when two bands overlap or leave a gap, or when they do not cover (0, pi].
std::vector<FrequencyBand> validate_partition(std::vector<FrequencyBand> bands);

// Quadrature nodes on (0, pi] with weights summing to pi. Integrals over
// (-pi, pi) of even integrands are twice the half-line sum.
struct FrequencyGrid {
  std::vector<double> points;
  std::vector<double> weights;

  // Composite midpoint rule with `size` equal cells.
  static FrequencyGrid uniform(int size);
  // Midpoint cells laid out band by band so every band edge is a cell edge;
  // about `size` cells in total, at least `min_per_band` per band.
  static FrequencyGrid aligned(int size, const std::vector<FrequencyBand>& bands, int min_per_band = 8);

  std::size_t size() const { return points.size(); }
  void validate() const;
};

using SpectralFn = std::function<CMatrix(double)>;
using SpectrumOnGrid = std::vector<CMatrix>;

SpectrumOnGrid evaluate(const SpectralFn& fn, const FrequencyGrid& grid);

enum class Kernel { Bartlett, Parzen };

double kernel_weight(Kernel kernel, double u);
// ceil(T^(1/3)).
double default_bandwidth(Eigen::Index t_len);

// Lag-window estimate (2 pi)^-1 sum_{|h|<T} K(h/B) exp(-i h w) Gamma(h),
// Gamma(h) = T^-1 sum_t f_{t+h} f_t'.
class LagWindowSpectrum {
 public:
  LagWindowSpectrum(const Matrix& series, Kernel kernel, double bandwidth);
  CMatrix operator()(double omega) const;

 private:
  std::vector<Matrix> weighted_autocov_;  // K(h/B) Gamma(h), h = 0..L
};

LagWindowSpectrum factor_spectrum_kernel(const Matrix& factors, Kernel kernel, double bandwidth);

// Parametric inverse spectrum of a VAR with lag matrices `coeffs` and
// innovation precision P:
//   f^-1(w) = A(w)' P A(-w),  A(w) = I - sum_h B(h) exp(i h w),
// which inverts (sum_h Psi(h) e^{-ihw}) Sigma (sum_h Psi(h) e^{ihw})'.
class VarInverseSpectrum {
 public:
  VarInverseSpectrum(MatrixList coeffs, Matrix precision);
  CMatrix operator()(double omega) const;

 private:
  MatrixList coeffs_;
  Matrix precision_;
};

VarInverseSpectrum idio_inverse_spectrum(const MatrixList& thresholded, const Matrix& precision);

// Inverts an inverse spectrum pointwise; a near-singular matrix is
// regularised with 1e-10 * I (and counted in `regularised` when given).
SpectralFn invert_spectrum(SpectralFn inverse, int* regularised = nullptr);

// f_x(w) = L f_f(w) L' + f_xi(w).
SpectralFn panel_spectrum(const Matrix& loadings, SpectralFn factor_spectrum, SpectralFn idio_spectrum);

// Multiplies a spectrum by a constant (used to move the lag-window density
// onto the autocovariance Fourier-sum scale).
SpectralFn scale_spectrum(SpectralFn fn, double factor);

// Truncated transfer function sum_{h<H} (L Psi_f(h) | Psi_xi(h)) exp(-i h w).
CMatrix transfer_function(const JointMaRepresentation& rep, double omega);

// Model-implied spectrum T(w) Sigma_eta T(w)^H from the truncated MA.
SpectralFn model_spectrum(const JointMaRepresentation& rep);

// (f(w))_kj = sigma_jj^-1 |e_k' T(w) Sigma_eta e_j|^2 / (f_x(w))_kk on every
// grid point, N x (r+N) each. The MA sums use rep.horizon terms.
std::vector<Matrix> causation_spectrum(const JointMaRepresentation& rep, const SpectrumOnGrid& panel,
                                       const FrequencyGrid& grid);

struct BandFevd {
  std::vector<Matrix> theta_band;  // aligned with the bands
  Matrix theta_inf;                // sum over the partition
};

// Weights (Gamma(w))_k = f_kk(w) / ((2 pi)^-1 int f_kk) and band integrals
// (2 pi)^-1 int_d Gamma_k f_kj, counting the mirrored negative frequencies.
BandFevd band_fevd(const std::vector<Matrix>& causation, const SpectrumOnGrid& panel, const FrequencyGrid& grid,
                   const std::vector<FrequencyBand>& bands);

struct BandConnectedness {
  std::string name;
  double swc = 0.0;
  double swc_mkt = 0.0;
  double swc_ids = 0.0;
};

struct SpectralConnectedness {
  std::vector<BandConnectedness> bands;
};

// Market and idiosyncratic frequency connectedness per band. Shares inside a
// band are normalised by the band total and then weighted by the band's
// share of the total, so the bands add up to the whole-line measure.
SpectralConnectedness spectral_connectedness(const BandFevd& fevd, const std::vector<FrequencyBand>& bands,
                                             int factors);

}  // namespace fconn
