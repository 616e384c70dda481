#pragma once

#include <functional>

#include "rpr/rng.hpp"
#include "rpr/types.hpp"

namespace rpr::test {

inline Vector random_vector(RngStream& rng, int n) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

inline Vector random_unit(RngStream& rng, int n) {
  Vector v = random_vector(rng, n);
  v.normalize();
  return v;
}

// Point inside the ball of the given radius around x_star.
inline Vector random_ball_point(RngStream& rng, const Vector& x_star,
                                double radius) {
  int n = static_cast<int>(x_star.size());
  Vector dir = random_unit(rng, n);
  double r = radius * std::pow(rng.uniform(), 1.0 / n);
  return x_star + r * dir;
}

inline Vector fd_gradient(const std::function<double(const Vector&)>& f,
                          const Vector& x, double h) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f,
                          const Vector& x, double h) {
  Matrix j(x.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    j.col(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return j;
}

// R^2 of the least-squares line through (t, y_t).
inline double linear_fit_r2(const std::vector<double>& y) {
  const int n = static_cast<int>(y.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += i;
    sy += y[i];
    sxx += static_cast<double>(i) * i;
    sxy += i * y[i];
  }
  double beta = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double alpha = (sy - beta * sx) / n;
  double ss_res = 0, ss_tot = 0;
  double mean = sy / n;
  for (int i = 0; i < n; ++i) {
    double fit = alpha + beta * i;
    ss_res += (y[i] - fit) * (y[i] - fit);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  return ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
}

}  // namespace rpr::test
