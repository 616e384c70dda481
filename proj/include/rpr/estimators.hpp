#pragma once

#include <utility>
#include <vector>

#include "rpr/types.hpp"

namespace rpr {

// Knobs of the robust estimators, overridable from the harness config
// ("estimators" key).
struct EstimatorTuning {
  double theta = 9.0;            // filter stop: lambda_max <= theta * robust scale
  double c1 = 1.0;               // eps' = c1 * log(1/delta)/m + eps
  double removal_divisor = 4.0;  // per-round removals: ceil(eps' * m_remaining / divisor)
  double budget_factor = 4.0;    // total removal budget: budget_factor * eps' * m
  int block_count = 0;           // robust_covariance blocks; 0 derives from eps', delta, m
};

struct EstimatorParams {
  double epsilon = 0.0;
  double delta = 0.05;
  int m = 0;
  EstimatorTuning tuning;

  // Effective contamination eps' = c1 * log(1/delta)/m + eps; must be <= 1/4.
  double eps_prime() const;
};

// Trimmed mean: sorts, drops the top and bottom ceil(eps' * m) entries.
double robust_scalar_mean(const std::vector<double>& values,
                          const EstimatorParams& params);

// Filtering stable mean over the rows of `points` (m x n). Repeatedly removes
// the points scoring highest along the top eigendirection of the retained
// covariance until the top eigenvalue drops below theta times a
// median-absolute-deviation variance scale or the removal budget runs out.
// The output is the average of the retained rows.
std::pair<Vector, FilterReport> stable_mean(const Matrix& points,
                                            const EstimatorParams& params);

// Robust second-moment estimate for mean-zero data: splits the rows into
// blocks, takes each block's second-moment matrix, and returns the block
// matrix minimising the total Frobenius distance to the others (the medoid),
// symmetrised and clipped to PSD.
Matrix robust_covariance(const Matrix& points, const EstimatorParams& params);

int covariance_block_count(const EstimatorParams& params);
// Index of the Frobenius medoid; exposed for direct testing.
int frobenius_medoid(const std::vector<Matrix>& blocks);
// Clamps negative eigenvalues to zero. Returns the input unchanged when it is
// already PSD.
Matrix psd_clip(const Matrix& m);

struct EigPair {
  double value = 0.0;
  Vector vector;
  bool converged = false;
  int iterations = 0;
};

// Largest (signed) eigenpair of (M + M')/2 by shifted power iteration from a
// deterministic start. Sign convention: first coordinate with a nonneglible
// magnitude is positive.
EigPair top_eigenpair(const Matrix& m);

}  // namespace rpr
