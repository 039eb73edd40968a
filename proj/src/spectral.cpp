#include "fconn/spectral.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fconn {

std::vector<FrequencyBand> default_daily_bands() {
  return {{"monthly", 2.0 * kPi / 20.0, kPi},
          {"quarterly", 2.0 * kPi / 60.0, 2.0 * kPi / 20.0},
          {"yearly", 0.0, 2.0 * kPi / 60.0}};
}

std::vector<FrequencyBand> validate_partition(std::vector<FrequencyBand> bands) {
  if (bands.empty()) throw DomainError("band partition is empty");
  constexpr double eps = 1e-12;
  for (const auto& b : bands) {
    if (!(b.lo >= -eps && b.lo < b.hi && b.hi <= kPi + eps)) {
      throw DomainError("band '" + b.name + "' must satisfy 0 <= lo < hi <= pi");
    }
  }
  std::sort(bands.begin(), bands.end(), [](const auto& a, const auto& b) { return a.lo < b.lo; });
  for (std::size_t k = 1; k < bands.size(); ++k) {
    const auto& prev = bands[k - 1];
    const auto& cur = bands[k];
    if (prev.hi > cur.lo + eps) throw DomainError("bands '" + prev.name + "' and '" + cur.name + "' overlap");
    if (prev.hi < cur.lo - eps) throw DomainError("gap between bands '" + prev.name + "' and '" + cur.name + "'");
  }
  if (std::abs(bands.front().lo) > eps || std::abs(bands.back().hi - kPi) > eps) {
    throw DomainError("bands must cover (0, pi]");
  }
  return bands;
}

FrequencyGrid FrequencyGrid::uniform(int size) {
  if (size < 1) throw DomainError("frequency grid needs at least one point");
  FrequencyGrid g;
  const double h = kPi / size;
  for (int k = 0; k < size; ++k) {
    g.points.push_back((k + 0.5) * h);
    g.weights.push_back(h);
  }
  return g;
}

FrequencyGrid FrequencyGrid::aligned(int size, const std::vector<FrequencyBand>& bands, int min_per_band) {
  const auto sorted = validate_partition(bands);
  FrequencyGrid g;
  for (const auto& b : sorted) {
    const int cells = std::max(min_per_band, static_cast<int>(std::lround(size * (b.hi - b.lo) / kPi)));
    const double h = (b.hi - b.lo) / cells;
    for (int k = 0; k < cells; ++k) {
      g.points.push_back(b.lo + (k + 0.5) * h);
      g.weights.push_back(h);
    }
  }
  return g;
}

void FrequencyGrid::validate() const {
  if (points.empty() || points.size() != weights.size()) throw DomainError("frequency grid: weight count mismatch");
  double total = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!(points[k] > 0.0 && points[k] <= kPi)) throw DomainError("frequency grid: point outside (0, pi]");
    if (k && !(points[k] > points[k - 1])) throw DomainError("frequency grid: points not increasing");
    if (!(weights[k] > 0.0)) throw DomainError("frequency grid: non-positive weight");
    total += weights[k];
  }
  if (std::abs(total - kPi) > 1e-9) throw DomainError("frequency grid: weights do not sum to pi");
}

SpectrumOnGrid evaluate(const SpectralFn& fn, const FrequencyGrid& grid) {
  SpectrumOnGrid out;
  out.reserve(grid.size());
  for (double w : grid.points) out.push_back(fn(w));
  return out;
}

double kernel_weight(Kernel kernel, double u) {
  const double a = std::abs(u);
  if (a >= 1.0) return 0.0;
  switch (kernel) {
    case Kernel::Bartlett:
      return 1.0 - a;
    case Kernel::Parzen:
      return a <= 0.5 ? 1.0 - 6.0 * a * a + 6.0 * a * a * a : 2.0 * (1.0 - a) * (1.0 - a) * (1.0 - a);
  }
  return 0.0;
}

double default_bandwidth(Eigen::Index t_len) { return std::ceil(std::cbrt(static_cast<double>(t_len))); }

LagWindowSpectrum::LagWindowSpectrum(const Matrix& series, Kernel kernel, double bandwidth) {
  const Eigen::Index t_len = series.rows();
  if (!(bandwidth >= 1.0 && bandwidth < static_cast<double>(t_len))) {
    throw DomainError("lag-window bandwidth must satisfy 1 <= B < T");
  }
  const Eigen::Index max_lag = std::min<Eigen::Index>(t_len - 1, static_cast<Eigen::Index>(std::ceil(bandwidth)));
  for (Eigen::Index h = 0; h <= max_lag; ++h) {
    const double k = kernel_weight(kernel, static_cast<double>(h) / bandwidth);
    if (k == 0.0) break;
    // Gamma(h) = T^-1 sum_t f_{t+h} f_t'
    Matrix gamma = series.bottomRows(t_len - h).transpose() * series.topRows(t_len - h) / static_cast<double>(t_len);
    weighted_autocov_.push_back(k * gamma);
  }
}

CMatrix LagWindowSpectrum::operator()(double omega) const {
  CMatrix f = weighted_autocov_.front().cast<Complex>();
  for (std::size_t h = 1; h < weighted_autocov_.size(); ++h) {
    const Complex e = std::polar(1.0, -static_cast<double>(h) * omega);
    const Matrix& g = weighted_autocov_[h];
    f += e * g.cast<Complex>() + std::conj(e) * g.transpose().cast<Complex>();
  }
  f /= 2.0 * kPi;
  return 0.5 * (f + f.adjoint());
}

LagWindowSpectrum factor_spectrum_kernel(const Matrix& factors, Kernel kernel, double bandwidth) {
  return LagWindowSpectrum(factors, kernel, bandwidth);
}

VarInverseSpectrum::VarInverseSpectrum(MatrixList coeffs, Matrix precision)
    : coeffs_(std::move(coeffs)), precision_(std::move(precision)) {
  for (const auto& b : coeffs_) {
    if (b.rows() != precision_.rows() || b.cols() != precision_.cols()) {
      throw DomainError("idio_inverse_spectrum: dimension mismatch");
    }
  }
}

CMatrix VarInverseSpectrum::operator()(double omega) const {
  const Eigen::Index n = precision_.rows();
  // a_minus = A(-w) = I - sum_h B(h) e^{-i h w}; A(w)' = conj(A(-w))'.
  CMatrix a_minus = CMatrix::Identity(n, n);
  for (std::size_t h = 0; h < coeffs_.size(); ++h) {
    a_minus -= std::polar(1.0, -static_cast<double>(h + 1) * omega) * coeffs_[h].cast<Complex>();
  }
  CMatrix out = a_minus.adjoint() * precision_.cast<Complex>() * a_minus;
  return 0.5 * (out + out.adjoint());
}

VarInverseSpectrum idio_inverse_spectrum(const MatrixList& thresholded, const Matrix& precision) {
  return VarInverseSpectrum(thresholded, precision);
}

SpectralFn invert_spectrum(SpectralFn inverse, int* regularised) {
  return [inverse = std::move(inverse), regularised](double omega) {
    const CMatrix m = inverse(omega);
    Eigen::PartialPivLU<CMatrix> lu(m);
    const double scale = m.cwiseAbs().maxCoeff();
    // Reciprocal condition estimate; fall back to a ridge when it is tiny.
    if (!(lu.rcond() > 1e-14)) {
      if (regularised) ++*regularised;
      const CMatrix ridge = m + CMatrix::Identity(m.rows(), m.cols()) * Complex(1e-10 * std::max(scale, 1.0), 0.0);
      CMatrix inv = ridge.lu().inverse();
      return CMatrix(0.5 * (inv + inv.adjoint()));
    }
    CMatrix inv = lu.inverse();
    return CMatrix(0.5 * (inv + inv.adjoint()));
  };
}

SpectralFn panel_spectrum(const Matrix& loadings, SpectralFn factor_spectrum, SpectralFn idio_spectrum) {
  const CMatrix l = loadings.cast<Complex>();
  return [l, ff = std::move(factor_spectrum), fx = std::move(idio_spectrum)](double omega) {
    CMatrix out = l * ff(omega) * l.adjoint() + fx(omega);
    return CMatrix(0.5 * (out + out.adjoint()));
  };
}

SpectralFn scale_spectrum(SpectralFn fn, double factor) {
  return [fn = std::move(fn), factor](double omega) { return CMatrix(factor * fn(omega)); };
}

CMatrix transfer_function(const JointMaRepresentation& rep, double omega) {
  CMatrix t = CMatrix::Zero(rep.series(), rep.factors() + rep.series());
  for (int h = 0; h < rep.horizon; ++h) {
    t += std::polar(1.0, -static_cast<double>(h) * omega) * rep.impulse_block(h).cast<Complex>();
  }
  return t;
}

SpectralFn model_spectrum(const JointMaRepresentation& rep) {
  return [rep](double omega) {
    const CMatrix t = transfer_function(rep, omega);
    CMatrix out = t * rep.sigma_eta.cast<Complex>() * t.adjoint();
    return CMatrix(0.5 * (out + out.adjoint()));
  };
}

std::vector<Matrix> causation_spectrum(const JointMaRepresentation& rep, const SpectrumOnGrid& panel,
                                       const FrequencyGrid& grid) {
  if (panel.size() != grid.size()) throw DomainError("causation_spectrum: spectrum/grid size mismatch");
  const Eigen::Index n = rep.series();
  const Eigen::Index k = rep.sigma_eta.rows();
  // Precompute (L Psi_f(h) | Psi_xi(h)) Sigma_eta once per lag.
  std::vector<Matrix> loaded;
  loaded.reserve(static_cast<std::size_t>(rep.horizon));
  for (int h = 0; h < rep.horizon; ++h) loaded.push_back(rep.impulse_block(h) * rep.sigma_eta);

  std::vector<Matrix> out;
  out.reserve(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double omega = grid.points[g];
    CMatrix m = CMatrix::Zero(n, k);
    for (int h = 0; h < rep.horizon; ++h) {
      m += std::polar(1.0, -static_cast<double>(h) * omega) * loaded[static_cast<std::size_t>(h)].cast<Complex>();
    }
    Matrix f(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double power = panel[g](i, i).real();
      if (!(power > 0.0)) {
        std::ostringstream msg;
        msg << "causation_spectrum: zero spectrum for series " << i << " at omega=" << omega;
        throw EstimationError(msg.str());
      }
      for (Eigen::Index j = 0; j < k; ++j) {
        const double sjj = rep.sigma_eta(j, j);
        f(i, j) = sjj > 0.0 ? std::norm(m(i, j)) / sjj / power : 0.0;
      }
    }
    out.push_back(std::move(f));
  }
  return out;
}

BandFevd band_fevd(const std::vector<Matrix>& causation, const SpectrumOnGrid& panel, const FrequencyGrid& grid,
                   const std::vector<FrequencyBand>& bands) {
  grid.validate();
  if (causation.size() != grid.size() || panel.size() != grid.size()) {
    throw DomainError("band_fevd: quadrature weight mismatch between grid and spectra");
  }
  validate_partition(bands);
  const Eigen::Index n = causation.front().rows();
  const Eigen::Index k = causation.front().cols();

  // (2 pi)^-1 int_{-pi}^{pi} f_kk = pi^-1 sum_g w_g f_kk(w_g) for an even f_kk.
  Vector total_power = Vector::Zero(n);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    total_power += grid.weights[g] * panel[g].diagonal().real();
  }
  total_power /= kPi;

  BandFevd out;
  out.theta_band.assign(bands.size(), Matrix::Zero(n, k));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double omega = grid.points[g];
    std::size_t band = bands.size();
    for (std::size_t b = 0; b < bands.size(); ++b) {
      if (bands[b].contains(omega)) {
        band = b;
        break;
      }
    }
    if (band == bands.size()) throw DomainError("band_fevd: grid point outside every band");
    const Vector weight = panel[g].diagonal().real().cwiseQuotient(total_power);
    out.theta_band[band] += (grid.weights[g] / kPi) * (weight.asDiagonal() * causation[g]);
  }
  out.theta_inf = Matrix::Zero(n, k);
  for (const auto& t : out.theta_band) out.theta_inf += t;
  return out;
}

SpectralConnectedness spectral_connectedness(const BandFevd& fevd, const std::vector<FrequencyBand>& bands,
                                             int factors) {
  if (fevd.theta_band.size() != bands.size()) throw DomainError("spectral_connectedness: band count mismatch");
  const Eigen::Index n = fevd.theta_inf.rows();
  const Eigen::Index r = factors;
  const Vector row_inf = fevd.theta_inf.rowwise().sum();
  if ((row_inf.array() <= 0.0).any()) throw DomainError("spectral_connectedness: zero total row");
  const double nn = static_cast<double>(n);
  // Scaled shares C = theta_d / rowsum(theta_inf); their whole-line total is N.
  const double total_inf = nn;

  SpectralConnectedness out;
  for (std::size_t b = 0; b < bands.size(); ++b) {
    const Matrix scaled = row_inf.cwiseInverse().asDiagonal() * fevd.theta_band[b];
    const double total_band = scaled.sum();
    BandConnectedness bc;
    bc.name = bands[b].name;
    if (total_band > 0.0) {
      double mkt = 0.0;
      double ids = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) {
        mkt += scaled.row(k).head(r).sum();
        for (Eigen::Index j = 0; j < n; ++j) {
          if (j != k) ids += scaled(k, r + j);
        }
      }
      // Within-band shares sum to N over the band, then carry the band weight.
      const double within = nn / total_band;
      const double weight = total_band / total_inf;
      bc.swc_mkt = mkt * within / nn * weight;
      bc.swc_ids = ids * within / nn * weight;
    }
    bc.swc = bc.swc_mkt + bc.swc_ids;
    out.bands.push_back(bc);
  }
  return out;
}

}  // namespace fconn
