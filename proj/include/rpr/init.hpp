#pragma once

#include "rpr/estimators.hpp"
#include "rpr/types.hpp"

namespace rpr {

enum class InitEstimator { mean_est, cov_est };

struct InitConfig {
  InitEstimator configuration = InitEstimator::mean_est;
  ModelVariant variant = ModelVariant::zero_mean;
  int m0 = 0;  // paired consumes 2*m0 raw samples
  double epsilon = 0.0;
  double delta = 0.05;
  bool naive = false;  // plain empirical means; baseline for comparisons only
  EstimatorTuning tuning;
};

struct InitResult {
  Vector x0;
  // Negative scale estimate; x0 is the zero vector and descent must refuse it.
  bool degenerate = false;
  double y_tilde_sq = 0.0;
  double top_eigenvalue = 0.0;
  bool power_converged = true;
  int filter_removed_total = 0;
  int filter_iterations_total = 0;
};

// Spectral initialisation. Builds a robust estimate Y of E[y a a'] (or of
// Cov(y a), per configuration), scales the top eigenvector of (Y + Y')/2 by
// the robust response-mean estimate. The paired variant first applies the
// pairing transform and runs the same steps on (b, c, upsilon) with the
// contamination fraction doubled.
InitResult spectral_init(const Batch& batch, const InitConfig& cfg);

}  // namespace rpr
