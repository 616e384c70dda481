#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "rpr/rng.hpp"

namespace rpr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ModelVariant { zero_mean, paired };

// Hidden ground truth x* plus its derived scalars.
struct Signal {
  Vector x_star;

  int n() const { return static_cast<int>(x_star.size()); }
  double norm() const { return x_star.norm(); }
  double norm_sq() const { return x_star.squaredNorm(); }
  // Signal-to-noise ratio in the variance form, ||x*||^2 / sigma.
  double snr(double sigma) const;

  void validate() const;
};

enum class NoiseFamily { gaussian, student_t, scaled_pareto, point_mass_zero };

// Declarative description of the response-noise law. sigma is the standard
// deviation after standardisation; df/shape parametrise the tails.
struct NoiseSpec {
  NoiseFamily family = NoiseFamily::gaussian;
  double mean = 0.0;
  double sigma = 0.0;
  double df = 0.0;     // student_t only; requires df > 4
  double shape = 0.0;  // scaled_pareto only; requires shape > 4

  void validate() const;
  // Central fourth moment K4^4 of the law.
  double central_fourth_moment() const;
  double draw(RngStream& rng) const;
};

enum class AdversaryKind {
  none,
  response_spike,
  direction_plant,
  sign_flip_largest,
  replace_iid
};

struct AdversarySpec {
  AdversaryKind kind = AdversaryKind::none;
  double epsilon = 0.0;  // contamination fraction, in [0, 1/2)

  double magnitude = 0.0;   // response_spike: replaced y value
  Vector plant_direction;   // direction_plant: unit vector v
  double plant_scale = 0.0; // direction_plant: L, so a = L*v and y = L^2
  NoiseSpec alt_noise;      // replace_iid: law of the replacement responses

  void validate(int n) const;
};

struct Sample {
  Vector a;
  double y = 0.0;
  // Diagnostic only. Estimators must never read this; a harness test runs the
  // pipeline with the flags wiped and asserts identical output.
  bool corrupted = false;
};

struct PairedSample {
  Vector b;
  Vector c;
  double upsilon = 0.0;
  bool corrupted = false;
};

struct SeedProvenance {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

struct Batch {
  std::vector<Sample> samples;
  SeedProvenance provenance;

  int size() const { return static_cast<int>(samples.size()); }
  int dim() const { return samples.empty() ? 0 : static_cast<int>(samples[0].a.size()); }
  int corrupted_count() const;
};

struct PairedBatch {
  std::vector<PairedSample> samples;
  SeedProvenance provenance;

  int size() const { return static_cast<int>(samples.size()); }
  int dim() const { return samples.empty() ? 0 : static_cast<int>(samples[0].b.size()); }
  int corrupted_count() const;
};

// Diagnostics from the filtering stable-mean estimator.
struct FilterReport {
  int removed_count = 0;
  int iterations = 0;
  double final_top_eigenvalue = 0.0;
  double final_weight_mass = 1.0;  // retained / initial
  bool budget_exhausted = false;   // stopped by the removal budget, not the threshold
};

}  // namespace rpr
