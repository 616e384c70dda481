#include "rpr/estimators.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rpr {

namespace {

double median_inplace(std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("median of empty range");
  std::size_t k = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + k, v.end());
  double hi = v[k];
  if (v.size() % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + k);
  return 0.5 * (lo + hi);
}

// Robust spread of the projections along the filter direction: variance of
// the values left after dropping the k_trim largest and smallest. Comparing
// lambda_max against its own trimmed counterpart keeps the stop rule
// calibrated for heavy-tailed clean data, where a coordinatewise MAD scale
// underestimates the bulk variance by far more than theta.
double trimmed_projection_variance(const Vector& proj, int k_trim) {
  std::vector<double> t(proj.data(), proj.data() + proj.size());
  std::sort(t.begin(), t.end());
  const int m = static_cast<int>(t.size());
  if (m - 2 * k_trim < 2) return 0.0;
  double mean = 0.0;
  for (int i = k_trim; i < m - k_trim; ++i) mean += t[i];
  mean /= (m - 2 * k_trim);
  double var = 0.0;
  for (int i = k_trim; i < m - k_trim; ++i) var += (t[i] - mean) * (t[i] - mean);
  return var / (m - 2 * k_trim);
}

}  // namespace

double EstimatorParams::eps_prime() const {
  if (m < 1) throw std::invalid_argument("EstimatorParams: m must be >= 1");
  if (delta <= 0.0 || delta >= 1.0)
    throw std::invalid_argument("EstimatorParams: delta must be in (0, 1)");
  if (epsilon < 0.0)
    throw std::invalid_argument("EstimatorParams: epsilon must be >= 0");
  double ep = tuning.c1 * std::log(1.0 / delta) / m + epsilon;
  if (ep > 0.25)
    throw std::invalid_argument(
        "EstimatorParams: effective contamination eps' exceeds 1/4");
  return ep;
}

double robust_scalar_mean(const std::vector<double>& values,
                          const EstimatorParams& params) {
  if (values.empty())
    throw std::invalid_argument("robust_scalar_mean: empty input");
  const int m = static_cast<int>(values.size());
  const int k = static_cast<int>(std::ceil(params.eps_prime() * m));
  if (m <= 2 * k)
    throw std::invalid_argument(
        "robust_scalar_mean: trim would remove all values (m <= 2k)");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (int i = k; i < m - k; ++i) sum += sorted[i];
  return sum / (m - 2 * k);
}

std::pair<Vector, FilterReport> stable_mean(const Matrix& points,
                                            const EstimatorParams& params) {
  const int m = static_cast<int>(points.rows());
  const int n = static_cast<int>(points.cols());
  if (m == 0) throw std::invalid_argument("stable_mean: empty input");
  const double ep = params.eps_prime();

  FilterReport report;

  // Power-of-two prescale keeps the filter exactly scale equivariant.
  double max_abs = points.cwiseAbs().maxCoeff();
  if (max_abs == 0.0 || !std::isfinite(max_abs)) {
    if (!std::isfinite(max_abs))
      throw std::invalid_argument("stable_mean: non-finite input");
    return {Vector::Zero(n), report};
  }
  int exp2;
  std::frexp(max_abs, &exp2);
  const double scale = std::ldexp(1.0, exp2);
  Matrix pts = points / scale;

  std::vector<int> retained(m);
  std::iota(retained.begin(), retained.end(), 0);
  const int budget = static_cast<int>(std::floor(params.tuning.budget_factor * ep * m));

  Vector mu = Vector::Zero(n);
  while (true) {
    ++report.iterations;
    const int mr = static_cast<int>(retained.size());
    Matrix centered(mr, n);
    mu.setZero();
    for (int r = 0; r < mr; ++r) mu += pts.row(retained[r]).transpose();
    mu /= mr;
    for (int r = 0; r < mr; ++r)
      centered.row(r) = pts.row(retained[r]) - mu.transpose();
    Matrix cov = (centered.transpose() * centered) / mr;

    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    const int top = n - 1;
    double lambda_max = eig.eigenvalues()[top];
    report.final_top_eigenvalue = lambda_max;

    Vector scores = centered * eig.eigenvectors().col(top);
    const int k_trim = static_cast<int>(std::ceil(ep * mr));
    double threshold =
        params.tuning.theta * trimmed_projection_variance(scores, k_trim);
    if (lambda_max <= threshold) {
      report.budget_exhausted = false;
      break;
    }
    if (report.removed_count >= budget) {
      report.budget_exhausted = true;
      break;
    }
    int k = static_cast<int>(std::ceil(ep * mr / params.tuning.removal_divisor));
    k = std::min({k, budget - report.removed_count, mr - 1});
    if (k <= 0) {
      report.budget_exhausted = true;
      break;
    }
    std::vector<int> order(mr);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      double sa = scores[a] * scores[a];
      double sb = scores[b] * scores[b];
      return sa != sb ? sa > sb : retained[a] < retained[b];
    });
    std::vector<int> next;
    next.reserve(mr - k);
    std::vector<char> drop(mr, 0);
    for (int r = 0; r < k; ++r) drop[order[r]] = 1;
    for (int r = 0; r < mr; ++r)
      if (!drop[r]) next.push_back(retained[r]);
    retained.swap(next);
    report.removed_count += k;
  }

  report.final_weight_mass = static_cast<double>(retained.size()) / m;
  report.final_top_eigenvalue *= scale * scale;
  return {mu * scale, report};
}

int covariance_block_count(const EstimatorParams& params) {
  if (params.tuning.block_count > 0) return params.tuning.block_count;
  double ep = params.eps_prime();
  int k = static_cast<int>(
      std::ceil(8.0 * (ep * params.m + std::log(1.0 / params.delta))));
  return std::max(10, k);
}

int frobenius_medoid(const std::vector<Matrix>& blocks) {
  const int k = static_cast<int>(blocks.size());
  if (k == 0) throw std::invalid_argument("frobenius_medoid: no blocks");
  const Eigen::Index len = blocks[0].size();
  Matrix flat(k, len);
  for (int i = 0; i < k; ++i)
    flat.row(i) = Eigen::Map<const Vector>(blocks[i].data(), len).transpose();
  Vector sq = flat.rowwise().squaredNorm();
  Matrix gram = flat * flat.transpose();
  int best = 0;
  double best_sum = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) {
    double sum = 0.0;
    for (int j = 0; j < k; ++j) {
      double d2 = sq[i] + sq[j] - 2.0 * gram(i, j);
      sum += std::sqrt(std::max(d2, 0.0));
    }
    if (sum < best_sum) {
      best_sum = sum;
      best = i;
    }
  }
  return best;
}

Matrix psd_clip(const Matrix& m) {
  Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.eigenvalues().minCoeff() >= 0.0) return sym;
  Vector clipped = eig.eigenvalues().cwiseMax(0.0);
  Matrix r =
      eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (r + r.transpose());
}

Matrix robust_covariance(const Matrix& points, const EstimatorParams& params) {
  const int m = static_cast<int>(points.rows());
  const int n = static_cast<int>(points.cols());
  if (m == 0) throw std::invalid_argument("robust_covariance: empty input");
  const int k = covariance_block_count(params);
  if (m < k)
    throw std::invalid_argument("robust_covariance: fewer points than blocks");

  std::vector<Matrix> blocks;
  blocks.reserve(k);
  const int base = m / k;
  const int extra = m % k;
  int row = 0;
  for (int b = 0; b < k; ++b) {
    const int sz = base + (b < extra ? 1 : 0);
    auto chunk = points.middleRows(row, sz);
    blocks.push_back((chunk.transpose() * chunk) / sz);
    row += sz;
  }
  return psd_clip(blocks[frobenius_medoid(blocks)]);
}

EigPair top_eigenpair(const Matrix& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("top_eigenpair: matrix must be square");
  if (!m.allFinite())
    throw std::invalid_argument("top_eigenpair: non-finite entries");
  const Eigen::Index n = m.rows();
  Matrix sym = 0.5 * (m + m.transpose());

  // Shift just enough (Gershgorin) that the iteration matrix is PSD, so the
  // power method tracks the largest signed eigenvalue without oscillating.
  double shift = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double off = sym.row(i).cwiseAbs().sum() - std::abs(sym(i, i));
    shift = std::max(shift, off - sym(i, i));
  }
  Matrix a = sym + shift * Matrix::Identity(n, n);

  Vector q(n);
  q[0] = 1.0;
  for (Eigen::Index i = 1; i < n; ++i) q[i] = 1e-6 * static_cast<double>(i);
  q.normalize();

  EigPair out;
  const int max_iter = 10000;
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    Vector next = a * q;
    double norm = next.norm();
    if (norm == 0.0) {
      out.converged = true;  // the zero matrix: any direction works
      break;
    }
    next /= norm;
    double diff = (next - q).norm();
    q = next;
    if (diff < 1e-12) {
      out.converged = true;
      break;
    }
  }

  double max_abs = q.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(q[i]) > 1e-12 * max_abs) {
      if (q[i] < 0.0) q = -q;
      break;
    }
  }
  out.vector = q;
  out.value = q.dot(sym * q);
  return out;
}

}  // namespace rpr
