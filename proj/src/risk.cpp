#include "rpr/risk.hpp"

#include <cmath>
#include <stdexcept>

namespace rpr {

namespace {

void check_dims(const Vector& x, const Vector& x_star) {
  if (x.size() != x_star.size())
    throw std::invalid_argument("dimension mismatch between x and x*");
}

Matrix identity(Eigen::Index n) { return Matrix::Identity(n, n); }

}  // namespace

double dist(const Vector& x, const Vector& x_star) {
  check_dims(x, x_star);
  return std::min((x - x_star).norm(), (x + x_star).norm());
}

double pop_risk(const Vector& x, const Signal& signal, double sigma,
                ModelVariant variant) {
  check_dims(x, signal.x_star);
  double nx2 = x.squaredNorm();
  double ns2 = signal.norm_sq();
  double ip = x.dot(signal.x_star);
  if (variant == ModelVariant::zero_mean) {
    return (3.0 * nx2 * nx2 - 2.0 * nx2 * ns2 - 4.0 * ip * ip + 3.0 * ns2 * ns2 +
            sigma * sigma) /
           4.0;
  }
  return (nx2 * nx2 - 2.0 * ip * ip + ns2 * ns2 + sigma * sigma / 2.0) / 2.0;
}

Vector pop_grad(const Vector& x, const Signal& signal, ModelVariant variant) {
  check_dims(x, signal.x_star);
  double nx2 = x.squaredNorm();
  double ns2 = signal.norm_sq();
  double ip = x.dot(signal.x_star);
  if (variant == ModelVariant::zero_mean)
    return 3.0 * nx2 * x - ns2 * x - 2.0 * ip * signal.x_star;
  return 2.0 * nx2 * x - 2.0 * ip * signal.x_star;
}

Matrix pop_hessian(const Vector& x, const Signal& signal, ModelVariant variant) {
  check_dims(x, signal.x_star);
  const Eigen::Index n = x.size();
  double nx2 = x.squaredNorm();
  double ns2 = signal.norm_sq();
  const Vector& xs = signal.x_star;
  if (variant == ModelVariant::zero_mean) {
    return 6.0 * (x * x.transpose()) + (3.0 * nx2 - ns2) * identity(n) -
           2.0 * (xs * xs.transpose());
  }
  return 2.0 * nx2 * identity(n) + 4.0 * (x * x.transpose()) -
         2.0 * (xs * xs.transpose());
}

Vector sample_grad(const Vector& x, const Sample& datum) {
  check_dims(x, datum.a);
  double ax = datum.a.dot(x);
  return ((ax * ax - datum.y) * ax) * datum.a;
}

Vector sample_grad(const Vector& x, const PairedSample& datum) {
  check_dims(x, datum.b);
  double bx = datum.b.dot(x);
  double cx = datum.c.dot(x);
  return (bx * cx - datum.upsilon) * (cx * datum.b + bx * datum.c);
}

const char* to_string(MomentKind kind) {
  switch (kind) {
    case MomentKind::e_y: return "E_y";
    case MomentKind::var_y: return "Var_y";
    case MomentKind::e_grad: return "E_grad";
    case MomentKind::e_y_aat: return "E_y_aat";
    case MomentKind::e_x2_xstar4_aat: return "E_x2_xstar4_aat";
    case MomentKind::grad_cov: return "grad_cov";
    case MomentKind::cov_ya: return "cov_ya";
    case MomentKind::e_upsilon_bct: return "E_upsilon_bct";
    case MomentKind::cov_upsilon_ci_b: return "cov_upsilon_ci_b";
    case MomentKind::grad_cov_paired: return "grad_cov_paired";
  }
  return "?";
}

MomentKind moment_kind_from_string(const std::string& name) {
  for (MomentKind k : kAllMomentKinds)
    if (name == to_string(k)) return k;
  throw std::invalid_argument("unsupported moment kind: " + name);
}

bool moment_needs_x(MomentKind kind) {
  switch (kind) {
    case MomentKind::e_grad:
    case MomentKind::e_x2_xstar4_aat:
    case MomentKind::grad_cov:
    case MomentKind::grad_cov_paired:
      return true;
    default:
      return false;
  }
}

bool moment_needs_coordinate(MomentKind kind) {
  return kind == MomentKind::cov_upsilon_ci_b;
}

bool moment_is_paired(MomentKind kind) {
  switch (kind) {
    case MomentKind::e_upsilon_bct:
    case MomentKind::cov_upsilon_ci_b:
    case MomentKind::grad_cov_paired:
      return true;
    default:
      return false;
  }
}

MomentValue moment_oracle(MomentKind kind, const Vector* x, const Signal& signal,
                          double sigma, int coordinate) {
  signal.validate();
  if (moment_needs_x(kind) && (x == nullptr || x->size() != signal.x_star.size()))
    throw std::invalid_argument("moment_oracle: this kind requires x of matching dimension");

  const Vector& xs = signal.x_star;
  const Eigen::Index n = xs.size();
  const double ns2 = signal.norm_sq();
  const double s2 = sigma * sigma;

  switch (kind) {
    case MomentKind::e_y:
      return ns2;
    case MomentKind::var_y:
      return 2.0 * ns2 * ns2 + s2;
    case MomentKind::e_grad:
      return pop_grad(*x, signal, ModelVariant::zero_mean);
    case MomentKind::e_y_aat:
      return Matrix(ns2 * identity(n) + 2.0 * (xs * xs.transpose()));
    case MomentKind::e_x2_xstar4_aat: {
      double nx2 = x->squaredNorm();
      double ip = x->dot(xs);
      double v1 = 12.0 * ip * ip * ns2 + 3.0 * ns2 * ns2 * nx2;
      double v2 = 6.0 * ns2 * ns2;
      double v34 = 24.0 * ip * ns2;
      double v5 = 24.0 * ip * ip + 12.0 * ns2 * nx2;
      return Matrix(v1 * identity(n) + v2 * (*x) * x->transpose() +
                    v34 * (xs * x->transpose() + (*x) * xs.transpose()) +
                    v5 * (xs * xs.transpose()));
    }
    case MomentKind::grad_cov: {
      // Sigma = cI*I + cxx*xx' + css*x*x*' + csx*(x*x' + xx*') + sigma^2(||x||^2 I + 2xx').
      // The xx' coefficient uses 81||x||^4; see tests for the hand-derived 1-D check.
      double nx2 = x->squaredNorm();
      double ip = x->dot(xs);
      double cI = 15.0 * nx2 * nx2 * nx2 + 12.0 * ip * ip * ns2 +
                  3.0 * ns2 * ns2 * nx2 - 24.0 * ip * ip * nx2 -
                  6.0 * nx2 * nx2 * ns2;
      double cxx = 81.0 * nx2 * nx2 + 5.0 * ns2 * ns2 - 48.0 * ip * ip -
                   18.0 * nx2 * ns2;
      double css = 20.0 * ip * ip + 12.0 * ns2 * nx2 - 12.0 * nx2 * nx2;
      double csx = 22.0 * ip * ns2 - 42.0 * ip * nx2;
      Matrix sig = cI * identity(n) + cxx * (*x) * x->transpose() +
                   css * (xs * xs.transpose()) +
                   csx * (xs * x->transpose() + (*x) * xs.transpose());
      sig += s2 * (nx2 * identity(n) + 2.0 * (*x) * x->transpose());
      return sig;
    }
    case MomentKind::cov_ya:
      return Matrix((3.0 * ns2 * ns2 + s2) * identity(n) +
                    12.0 * ns2 * (xs * xs.transpose()));
    case MomentKind::e_upsilon_bct:
      return Matrix(xs * xs.transpose());
    case MomentKind::cov_upsilon_ci_b: {
      if (coordinate < 0 || coordinate >= n)
        throw std::invalid_argument("moment_oracle: coordinate out of range");
      double xi2 = xs[coordinate] * xs[coordinate];
      return Matrix((ns2 * ns2 + 2.0 * xi2 * ns2 + s2 / 2.0) * identity(n) +
                    (2.0 * ns2 + 3.0 * xi2) * (xs * xs.transpose()));
    }
    case MomentKind::grad_cov_paired: {
      double nx2 = x->squaredNorm();
      double ip = x->dot(xs);
      double cI = 6.0 * nx2 * nx2 * nx2 + 2.0 * ns2 * ns2 * nx2 +
                  4.0 * ip * ip * ns2 - 12.0 * ip * ip * nx2;
      double cxx = 26.0 * nx2 * nx2 + 2.0 * ns2 * ns2 - 16.0 * ip * ip;
      double css = 12.0 * ip * ip + 4.0 * ns2 * nx2 - 4.0 * nx2 * nx2;
      double csx = 4.0 * ip * ns2 - 16.0 * ip * nx2;
      Matrix sig = cI * identity(n) + cxx * (*x) * x->transpose() +
                   css * (xs * xs.transpose()) +
                   csx * (xs * x->transpose() + (*x) * xs.transpose());
      sig += s2 * (nx2 * identity(n) + (*x) * x->transpose());
      return sig;
    }
  }
  throw std::invalid_argument("moment_oracle: unsupported kind");
}

GradCovBounds grad_cov_bounds(const Vector& x, const Signal& signal, double sigma,
                              ModelVariant variant) {
  check_dims(x, signal.x_star);
  GradCovBounds out;
  double h2 = (x - signal.x_star).squaredNorm();
  double ns2 = signal.norm_sq();
  double n = static_cast<double>(x.size());
  double s2 = sigma * sigma;
  if (variant == ModelVariant::zero_mean) {
    out.in_ball = h2 <= ns2 / 81.0;
    out.opnorm_bound = 525.0 * h2 * ns2 * ns2 + 6.0 * s2 * ns2;
  } else {
    out.in_ball = h2 <= ns2 / 36.0;
    out.opnorm_bound = 242.0 * h2 * ns2 * ns2 + 3.0 * s2 * ns2;
  }
  out.trace_bound = n * out.opnorm_bound;
  return out;
}

}  // namespace rpr
