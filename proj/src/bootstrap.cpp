#include "fconn/bootstrap.hpp"

#include "fconn/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <optional>

namespace fconn {

void BootstrapConfig::validate() const {
  if (replications < 2) throw DomainError("bootstrap: replications must be >= 2");
  if (burn_in < 0) throw DomainError("bootstrap: burn_in must be >= 0");
  if (!(confidence > 0.0 && confidence < 1.0)) throw DomainError("bootstrap: confidence must lie in (0, 1)");
}

GaussianSampler::GaussianSampler(const Matrix& cov) {
  const Matrix sym = 0.5 * (cov + cov.transpose());
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() == Eigen::Success) {
    factor_ = llt.matrixL();
    return;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  const double top = std::max(es.eigenvalues().maxCoeff(), 0.0);
  if (!(top > 0.0)) {
    factor_ = Matrix::Zero(cov.rows(), cov.cols());
    clipped_ = true;
    return;
  }
  const Vector clipped = es.eigenvalues().cwiseMax(1e-12 * top);
  factor_ = es.eigenvectors() * clipped.cwiseSqrt().asDiagonal();
  clipped_ = true;
  spdlog::warn("bootstrap: innovation covariance not positive definite; eigenvalues clipped at 1e-12");
}

Vector GaussianSampler::draw(std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(factor_.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  return factor_ * z;
}

Matrix generate_pseudo_panel(const FactorModelFit& ff, const SparseVarFit& sv, const Matrix& sigma_v, int t_len,
                             int burn_in, std::mt19937_64& rng) {
  const Eigen::Index r = ff.loadings.cols();
  const Eigen::Index n = ff.loadings.rows();
  if (sv.dim() != n || sigma_v.rows() != n || ff.factor_resid_cov.rows() != r) {
    throw DomainError("generate_pseudo_panel: fitted inputs are dimension-inconsistent");
  }
  if (t_len < 1 || burn_in < 0) throw DomainError("generate_pseudo_panel: bad length");
  const GaussianSampler u_draw(ff.factor_resid_cov);
  const GaussianSampler v_draw(sigma_v);

  const int total = burn_in + t_len;
  Matrix f = Matrix::Zero(total, r);
  Matrix xi = Matrix::Zero(total, n);
  const int p_f = static_cast<int>(ff.factor_var_coeffs.size());
  const int p_xi = sv.lags();
  for (int t = 0; t < total; ++t) {
    Vector ft = u_draw.draw(rng);
    Vector xt = v_draw.draw(rng);
    for (int j = 1; j <= p_f && j <= t; ++j) ft += ff.factor_var_coeffs[static_cast<std::size_t>(j - 1)] * f.row(t - j).transpose();
    for (int j = 1; j <= p_xi && j <= t; ++j) xt += sv.coeffs[static_cast<std::size_t>(j - 1)] * xi.row(t - j).transpose();
    f.row(t) = ft.transpose();
    xi.row(t) = xt.transpose();
  }
  return f.bottomRows(t_len) * ff.loadings.transpose() + xi.bottomRows(t_len);
}

std::mt19937_64 replication_rng(std::uint64_t master_seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

double sample_quantile(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) throw DomainError("sample_quantile: empty sample");
  const double pos = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BootstrapResult bootstrap_connectedness(const Matrix& x, const ModelOrder& order, const BootstrapConfig& boot,
                                        const EstimationConfig& cfg) {
  boot.validate();
  BootstrapResult result;
  result.estimate = estimate_window(x, order, cfg, EstimateOptions{true, std::nullopt});
  const auto& est = result.estimate;
  const auto point = measures(est);
  const double rho = est.precision->penalty;
  const int t_len = static_cast<int>(x.rows());

  const auto reps = static_cast<std::size_t>(boot.replications);
  std::vector<std::optional<std::vector<double>>> draws(reps);
  parallel_for(reps, boot.threads, [&](std::size_t b) {
    auto rng = replication_rng(boot.seed, b);
    try {
      const Matrix xs = generate_pseudo_panel(est.factor, est.idio, est.precision->covariance, t_len, boot.burn_in, rng);
      const auto star = estimate_window(xs, order, cfg, EstimateOptions{false, rho});
      const auto m = measures(star);
      if (m.size() != point.size()) return;
      std::vector<double> values;
      for (const auto& [name, value] : m) values.push_back(value);
      draws[b] = std::move(values);
    } catch (const Error& e) {
      spdlog::debug("bootstrap replication {} failed: {}", b, e.what());
    }
  });

  std::vector<std::vector<double>> deviations(point.size());
  for (const auto& d : draws) {
    if (!d) {
      ++result.failures;
      continue;
    }
    ++result.replications_used;
    for (std::size_t k = 0; k < point.size(); ++k) deviations[k].push_back((*d)[k] - point[k].second);
  }
  if (result.failures * 10 > boot.replications) {
    throw EstimationError("bootstrap: " + std::to_string(result.failures) + " of " +
                          std::to_string(boot.replications) + " replications failed");
  }
  if (result.replications_used < 2) throw EstimationError("bootstrap: fewer than two usable replications");

  const double alpha = 1.0 - boot.confidence;
  for (std::size_t k = 0; k < point.size(); ++k) {
    auto& dev = deviations[k];
    std::sort(dev.begin(), dev.end());
    BandedMeasure bm;
    bm.measure = point[k].first;
    bm.point = point[k].second;
    bm.lower = bm.point - sample_quantile(dev, 1.0 - alpha / 2.0);
    bm.upper = bm.point - sample_quantile(dev, alpha / 2.0);
    result.bands.push_back(bm);
  }
  return result;
}

}  // namespace fconn
