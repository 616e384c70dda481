#pragma once

#include <optional>
#include <vector>

#include "rpr/estimators.hpp"
#include "rpr/types.hpp"

namespace rpr {

struct DescentParams {
  int T = 1;
  int m_tilde = 0;  // paired consumes 2*m_tilde raw samples per iteration
  double epsilon = 0.0;
  double delta = 0.05;  // spent per iteration; overall budget is T * delta
  ModelVariant variant = ModelVariant::zero_mean;
  std::optional<double> eta_override;
  bool naive = false;  // plain averaged gradients; baseline only
  EstimatorTuning tuning;
};

// zero_mean: 128/(981 ||x0||^2); paired: 1024/(1647 ||x0||^2).
double step_size(double x0_norm, ModelVariant variant);

struct StepResult {
  Vector x_next;
  FilterReport report;
  double grad_norm = 0.0;
};

// One robust gradient step: gradient points from every sample, stable mean,
// x - eta * g. The batch must be fresh (never previously consumed).
StepResult rgd_step(const Vector& x_t, const Batch& batch, double eta,
                    const DescentParams& params);
StepResult rgd_step(const Vector& x_t, const PairedBatch& batch, double eta,
                    const DescentParams& params);

// Supplies one fresh contaminated batch per call. Implementations must never
// serve the same batch twice; solve() calls next() exactly T times.
class BatchSource {
 public:
  virtual ~BatchSource() = default;
  virtual Batch next() = 0;
};

struct DescentTrace {
  std::vector<Vector> iterates;              // length T + 1
  std::vector<double> dist_curve;            // length T + 1 when x* is known
  std::vector<double> grad_norms;            // length T
  std::vector<FilterReport> filter_reports;  // length T
  std::vector<double> elapsed_ms;            // length T
  double eta = 0.0;
  int batches_consumed = 0;
  // Iterations whose iterate left the contraction ball (radius ||x*||/9 or
  // ||x*||/6 by variant); logged when x* is known, never enforced.
  int ball_excursions = 0;
};

// Runs T robust gradient steps from x0 with eta = step_size(||x0||) unless
// overridden. The paired variant pairs each raw batch of size 2*m_tilde
// first. x_star, when given, is used for trace diagnostics only.
DescentTrace solve(const Vector& x0, BatchSource& source,
                   const DescentParams& params, const Vector* x_star = nullptr);

}  // namespace rpr
