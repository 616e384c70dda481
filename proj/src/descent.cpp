#include "rpr/descent.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "rpr/model.hpp"
#include "rpr/risk.hpp"

namespace rpr {

namespace {

StepResult step_from_points(const Vector& x_t, const Matrix& points, double eta,
                            double eps_eff, const DescentParams& params) {
  StepResult out;
  Vector g;
  if (params.naive) {
    g = points.colwise().mean().transpose();
  } else {
    EstimatorParams est{eps_eff, params.delta, static_cast<int>(points.rows()),
                        params.tuning};
    auto [mu, rep] = stable_mean(points, est);
    g = mu;
    out.report = rep;
  }
  out.grad_norm = g.norm();
  out.x_next = x_t - eta * g;
  return out;
}

}  // namespace

double step_size(double x0_norm, ModelVariant variant) {
  if (!(x0_norm > 0.0))
    throw std::invalid_argument("step_size: degenerate initialization (||x0|| = 0)");
  double sq = x0_norm * x0_norm;
  if (variant == ModelVariant::zero_mean) return 128.0 / (981.0 * sq);
  return 1024.0 / (1647.0 * sq);
}

StepResult rgd_step(const Vector& x_t, const Batch& batch, double eta,
                    const DescentParams& params) {
  if (!(eta > 0.0)) throw std::invalid_argument("rgd_step: eta must be positive");
  const int m = batch.size();
  if (m == 0) throw std::invalid_argument("rgd_step: empty batch");
  Matrix points(m, x_t.size());
  for (int j = 0; j < m; ++j)
    points.row(j) = sample_grad(x_t, batch.samples[j]).transpose();
  return step_from_points(x_t, points, eta, params.epsilon, params);
}

StepResult rgd_step(const Vector& x_t, const PairedBatch& batch, double eta,
                    const DescentParams& params) {
  if (!(eta > 0.0)) throw std::invalid_argument("rgd_step: eta must be positive");
  const int m = batch.size();
  if (m == 0) throw std::invalid_argument("rgd_step: empty batch");
  Matrix points(m, x_t.size());
  for (int j = 0; j < m; ++j)
    points.row(j) = sample_grad(x_t, batch.samples[j]).transpose();
  // Pairing doubles the contamination fraction.
  return step_from_points(x_t, points, eta, 2.0 * params.epsilon, params);
}

DescentTrace solve(const Vector& x0, BatchSource& source,
                   const DescentParams& params, const Vector* x_star) {
  if (params.T < 0) throw std::invalid_argument("solve: T must be >= 0");
  if (!(x0.norm() > 0.0))
    throw std::invalid_argument("solve: degenerate initialization (||x0|| = 0)");

  DescentTrace trace;
  trace.eta = params.eta_override.value_or(step_size(x0.norm(), params.variant));

  double ball_radius = 0.0;
  if (x_star != nullptr) {
    ball_radius = params.variant == ModelVariant::zero_mean ? x_star->norm() / 9.0
                                                            : x_star->norm() / 6.0;
  }

  auto record = [&](const Vector& x) {
    trace.iterates.push_back(x);
    if (x_star != nullptr) {
      double d = dist(x, *x_star);
      trace.dist_curve.push_back(d);
      if (d > ball_radius) ++trace.ball_excursions;
    }
  };
  record(x0);

  Vector x = x0;
  for (int t = 0; t < params.T; ++t) {
    auto t0 = std::chrono::steady_clock::now();
    Batch raw = source.next();
    ++trace.batches_consumed;
    StepResult step;
    if (params.variant == ModelVariant::zero_mean) {
      if (raw.size() != params.m_tilde)
        throw std::invalid_argument("solve: batch size must equal m_tilde");
      step = rgd_step(x, raw, trace.eta, params);
    } else {
      if (raw.size() != 2 * params.m_tilde)
        throw std::invalid_argument("solve: paired variant needs 2*m_tilde raw samples");
      step = rgd_step(x, pair_transform(raw), trace.eta, params);
    }
    x = step.x_next;
    record(x);
    trace.grad_norms.push_back(step.grad_norm);
    trace.filter_reports.push_back(step.report);
    auto t1 = std::chrono::steady_clock::now();
    trace.elapsed_ms.push_back(
        std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return trace;
}

}  // namespace rpr
