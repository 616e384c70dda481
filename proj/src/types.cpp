#include "rpr/types.hpp"

#include <cmath>
#include <stdexcept>

namespace rpr {

double Signal::snr(double sigma) const {
  if (sigma <= 0.0) return std::numeric_limits<double>::infinity();
  return norm_sq() / sigma;
}

void Signal::validate() const {
  if (x_star.size() < 1) throw std::invalid_argument("Signal: n must be >= 1");
  if (!(x_star.norm() > 0.0))
    throw std::invalid_argument("Signal: x_star must have positive norm");
}

void NoiseSpec::validate() const {
  if (sigma < 0.0) throw std::invalid_argument("NoiseSpec: sigma must be >= 0");
  switch (family) {
    case NoiseFamily::gaussian:
      break;
    case NoiseFamily::student_t:
      if (!(df > 4.0))
        throw std::invalid_argument(
            "NoiseSpec: student_t requires df > 4 (finite central fourth moment)");
      break;
    case NoiseFamily::scaled_pareto:
      if (!(shape > 4.0))
        throw std::invalid_argument(
            "NoiseSpec: scaled_pareto requires shape > 4 (finite central fourth moment)");
      break;
    case NoiseFamily::point_mass_zero:
      if (sigma != 0.0 || mean != 0.0)
        throw std::invalid_argument(
            "NoiseSpec: point_mass_zero requires mean = 0 and sigma = 0");
      break;
  }
}

double NoiseSpec::central_fourth_moment() const {
  double s4 = sigma * sigma * sigma * sigma;
  switch (family) {
    case NoiseFamily::gaussian:
      return 3.0 * s4;
    case NoiseFamily::student_t:
      // Kurtosis of t(df) is 3 + 6/(df - 4).
      return s4 * (3.0 + 6.0 / (df - 4.0));
    case NoiseFamily::scaled_pareto: {
      double a = shape;
      double excess =
          6.0 * (a * a * a + a * a - 6.0 * a - 2.0) / (a * (a - 3.0) * (a - 4.0));
      return s4 * (3.0 + excess);
    }
    case NoiseFamily::point_mass_zero:
      return 0.0;
  }
  return 0.0;
}

double NoiseSpec::draw(RngStream& rng) const {
  switch (family) {
    case NoiseFamily::gaussian:
      return mean + sigma * rng.normal();
    case NoiseFamily::student_t: {
      double t = rng.student_t(df);
      return mean + sigma * t / std::sqrt(df / (df - 2.0));
    }
    case NoiseFamily::scaled_pareto: {
      double x = rng.pareto(shape);
      double mu_x = shape / (shape - 1.0);
      double var_x = shape / ((shape - 1.0) * (shape - 1.0) * (shape - 2.0));
      return mean + sigma * (x - mu_x) / std::sqrt(var_x);
    }
    case NoiseFamily::point_mass_zero:
      return 0.0;
  }
  return 0.0;
}

void AdversarySpec::validate(int n) const {
  if (epsilon < 0.0 || epsilon >= 0.5)
    throw std::invalid_argument("AdversarySpec: epsilon must be in [0, 1/2)");
  if (kind == AdversaryKind::direction_plant) {
    if (plant_direction.size() != n)
      throw std::invalid_argument("AdversarySpec: plant direction has wrong dimension");
    if (std::abs(plant_direction.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("AdversarySpec: plant direction must be a unit vector");
  }
  if (kind == AdversaryKind::replace_iid) alt_noise.validate();
}

int Batch::corrupted_count() const {
  int c = 0;
  for (const auto& s : samples) c += s.corrupted ? 1 : 0;
  return c;
}

int PairedBatch::corrupted_count() const {
  int c = 0;
  for (const auto& s : samples) c += s.corrupted ? 1 : 0;
  return c;
}

}  // namespace rpr
