#include "rpr/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace rpr {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_stream(std::uint64_t seed,
                            std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t w : words) h = splitmix64(h ^ w);
  return h;
}

double RngStream::uniform() {
  // 53 random bits mapped to (0, 1].
  return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  double u1 = uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

double RngStream::gamma(double alpha, double scale) {
  if (alpha <= 0.0 || scale <= 0.0)
    throw std::invalid_argument("gamma: alpha and scale must be positive");
  if (alpha < 1.0) {
    // Boost to alpha + 1 and correct with the standard power-of-uniform trick.
    double g = gamma(alpha + 1.0, 1.0);
    return scale * g * std::pow(uniform(), 1.0 / alpha);
  }
  // Marsaglia-Tsang squeeze.
  double d = alpha - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return scale * d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return scale * d * v;
  }
}

double RngStream::student_t(double df) {
  double z = normal();
  double chi2 = gamma(df / 2.0, 2.0);
  return z / std::sqrt(chi2 / df);
}

double RngStream::pareto(double shape) {
  return std::pow(uniform(), -1.0 / shape);
}

std::uint64_t RngStream::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("below: bound must be positive");
  // Rejection sampling to avoid modulo bias.
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = gen_();
  } while (x >= limit);
  return x % bound;
}

}  // namespace rpr
