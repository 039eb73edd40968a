#pragma once

#include "fconn/factor.hpp"
#include "fconn/pipeline.hpp"
#include "fconn/sparsevar.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace fconn {

struct BootstrapConfig {
  int replications = 499;
  int burn_in = 200;
  double confidence = 0.95;
  std::uint64_t seed = 20240101;
  unsigned threads = 1;

  void validate() const;
};

// Draws from N(0, cov). A covariance that is not positive definite is
// repaired by clipping eigenvalues at 1e-12 times the largest one.
class GaussianSampler {
 public:
  explicit GaussianSampler(const Matrix& cov);
  Vector draw(std::mt19937_64& rng) const;
  bool clipped() const { return clipped_; }

 private:
  Matrix factor_;
  bool clipped_ = false;
};

// Pseudo panel x*_t = L f*_t + xi*_t (t = 1..T) from Gaussian innovations
// pushed through the fitted factor and idiosyncratic VARs, discarding
// `burn_in` initial steps.
Matrix generate_pseudo_panel(const FactorModelFit& factor_fit, const SparseVarFit& sparse_fit, const Matrix& sigma_v,
                             int t_len, int burn_in, std::mt19937_64& rng);

// Independent stream for replication `index` derived from the master seed.
std::mt19937_64 replication_rng(std::uint64_t master_seed, std::uint64_t index);

struct BandedMeasure {
  std::string measure;
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct BootstrapResult {
  WindowEstimate estimate;
  std::vector<BandedMeasure> bands;
  int replications_used = 0;
  int failures = 0;
};

// Linear-interpolation sample quantile (type 7); `sorted` must be ascending.
double sample_quantile(const std::vector<double>& sorted, double prob);

// Residual-based parametric bootstrap at a fixed model order. Each replication
// regenerates a panel, re-estimates the whole pipeline and recomputes every
// measure; the interval for a measure m is
//   [m - q(1 - a/2), m - q(a/2)]
// with q the quantiles of m* - m. Failed replications are skipped; more than
// 10% failures aborts.
BootstrapResult bootstrap_connectedness(const Matrix& x, const ModelOrder& order, const BootstrapConfig& boot,
                                        const EstimationConfig& cfg);

}  // namespace fconn
