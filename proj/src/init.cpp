#include "rpr/init.hpp"

#include <cmath>
#include <stdexcept>

#include "rpr/model.hpp"

namespace rpr {

namespace {

struct WorkingData {
  Matrix left;   // m x n: a (zero_mean) or b (paired)
  Matrix right;  // m x n: a again (zero_mean) or c (paired)
  Vector resp;   // y or upsilon
};

WorkingData assemble(const Batch& batch, const InitConfig& cfg) {
  WorkingData w;
  if (cfg.variant == ModelVariant::zero_mean) {
    if (batch.size() != cfg.m0)
      throw std::invalid_argument("spectral_init: batch size must equal m0");
    const int m = batch.size();
    const int n = batch.dim();
    w.left.resize(m, n);
    w.resp.resize(m);
    for (int j = 0; j < m; ++j) {
      w.left.row(j) = batch.samples[j].a.transpose();
      w.resp[j] = batch.samples[j].y;
    }
    w.right = w.left;
  } else {
    if (batch.size() != 2 * cfg.m0)
      throw std::invalid_argument("spectral_init: paired variant needs 2*m0 raw samples");
    PairedBatch pb = pair_transform(batch);
    const int m = pb.size();
    const int n = pb.dim();
    w.left.resize(m, n);
    w.right.resize(m, n);
    w.resp.resize(m);
    for (int j = 0; j < m; ++j) {
      w.left.row(j) = pb.samples[j].b.transpose();
      w.right.row(j) = pb.samples[j].c.transpose();
      w.resp[j] = pb.samples[j].upsilon;
    }
  }
  return w;
}

}  // namespace

InitResult spectral_init(const Batch& batch, const InitConfig& cfg) {
  if (cfg.m0 < 1) throw std::invalid_argument("spectral_init: m0 must be >= 1");
  WorkingData w = assemble(batch, cfg);
  const int m = static_cast<int>(w.resp.size());
  const int n = static_cast<int>(w.left.cols());
  if (cfg.m0 < n) throw std::invalid_argument("spectral_init: m0 must be >= n");

  const double eps_eff =
      cfg.variant == ModelVariant::paired ? 2.0 * cfg.epsilon : cfg.epsilon;

  InitResult res;
  Matrix y_mat(n, n);

  if (cfg.naive) {
    // Plain empirical mean of resp * left * right'.
    y_mat = (w.left.transpose() * (w.right.array().colwise() * w.resp.array()).matrix()) / m;
  } else if (cfg.configuration == InitEstimator::mean_est) {
    // Column i estimates E[resp (right'e_i) left]; delta is split as
    // delta/(2n) per column plus delta/2 for the scale step.
    EstimatorParams col_params{eps_eff, cfg.delta / (2.0 * n), m, cfg.tuning};
    for (int i = 0; i < n; ++i) {
      Vector weight = w.resp.array() * w.right.col(i).array();
      Matrix pts = w.left.array().colwise() * weight.array();
      auto [mu, rep] = stable_mean(pts, col_params);
      y_mat.col(i) = mu;
      res.filter_removed_total += rep.removed_count;
      res.filter_iterations_total += rep.iterations;
    }
  } else {
    EstimatorParams cov_params{eps_eff, cfg.delta / 2.0, m, cfg.tuning};
    Matrix pts = w.left.array().colwise() * w.resp.array();
    y_mat = robust_covariance(pts, cov_params);
  }

  // Scale: robust mean of y (zero_mean) or of upsilon * b'c (paired).
  std::vector<double> scale_values(m);
  if (cfg.variant == ModelVariant::zero_mean) {
    for (int j = 0; j < m; ++j) scale_values[j] = w.resp[j];
  } else {
    for (int j = 0; j < m; ++j)
      scale_values[j] = w.resp[j] * w.left.row(j).dot(w.right.row(j));
  }
  if (cfg.naive) {
    double sum = 0.0;
    for (double v : scale_values) sum += v;
    res.y_tilde_sq = sum / m;
  } else {
    EstimatorParams scale_params{eps_eff, cfg.delta / 2.0, m, cfg.tuning};
    res.y_tilde_sq = robust_scalar_mean(scale_values, scale_params);
  }

  if (res.y_tilde_sq < 0.0) {
    res.x0 = Vector::Zero(n);
    res.degenerate = true;
    return res;
  }

  EigPair eig = top_eigenpair(0.5 * (y_mat + y_mat.transpose()));
  res.top_eigenvalue = eig.value;
  res.power_converged = eig.converged;
  res.x0 = std::sqrt(res.y_tilde_sq) * eig.vector;
  return res;
}

}  // namespace rpr
