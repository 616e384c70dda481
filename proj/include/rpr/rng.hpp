#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rpr {

// SplitMix64 mixing step. Doubles as the documented substream hash:
// derive_stream(seed, {w0, w1, ...}) chains h = splitmix64(h ^ w) over the
// words, so every (seed, trial, phase, batch) tuple maps to a stable key.
std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t derive_stream(std::uint64_t seed,
                            std::initializer_list<std::uint64_t> words);

// Deterministic random stream. Gaussian/gamma/pareto deviates are built from
// raw mt19937_64 bits (Box-Muller, Marsaglia-Tsang, inverse CDF) instead of
// std::*_distribution, so sequences do not depend on the standard library's
// distribution internals.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : gen_(key) {}

  std::uint64_t raw() { return gen_(); }

  // Uniform on (0, 1]; never returns 0 so log() stays finite.
  double uniform();

  double normal();

  // Gamma(alpha, scale) for alpha > 0.
  double gamma(double alpha, double scale);

  // Student t with df degrees of freedom (df need not be an integer).
  double student_t(double df);

  // Pareto with x_m = 1 and the given shape.
  double pareto(double shape);

  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace rpr
