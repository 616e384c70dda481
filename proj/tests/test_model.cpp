#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "helpers.hpp"
#include "rpr/model.hpp"
#include "rpr/risk.hpp"

using namespace rpr;

namespace {

Signal make_signal(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return Signal{v};
}

bool same_sample(const Sample& a, const Sample& b) {
  return a.y == b.y && a.a == b.a;
}

// Order-insensitive batch comparison.
bool permutation_equal(const Batch& a, const Batch& b) {
  if (a.size() != b.size()) return false;
  auto key = [](const Sample& s) {
    std::ostringstream os;
    os.precision(17);
    os << s.y;
    for (Eigen::Index i = 0; i < s.a.size(); ++i) os << "," << s.a[i];
    return os.str();
  };
  std::vector<std::string> ka, kb;
  for (const auto& s : a.samples) ka.push_back(key(s));
  for (const auto& s : b.samples) kb.push_back(key(s));
  std::sort(ka.begin(), ka.end());
  std::sort(kb.begin(), kb.end());
  return ka == kb;
}

}  // namespace

TEST_CASE("draw_clean: point_mass_zero responses are exact") {
  Signal sig = make_signal({1.5, -0.5, 2.0});
  NoiseSpec noise;
  noise.family = NoiseFamily::point_mass_zero;
  noise.sigma = 0.0;
  Batch b = draw_clean(100, sig, noise, 123);
  for (const auto& s : b.samples) {
    double ax = s.a.dot(sig.x_star);
    CHECK(s.y == ax * ax);
    CHECK_FALSE(s.corrupted);
  }
}

TEST_CASE("draw_clean: same stream key gives bit-identical batches") {
  Signal sig = make_signal({1.0, 2.0});
  NoiseSpec noise;
  noise.sigma = 0.7;
  Batch b1 = draw_clean(50, sig, noise, 99);
  Batch b2 = draw_clean(50, sig, noise, 99);
  REQUIRE(b1.size() == b2.size());
  for (int j = 0; j < b1.size(); ++j)
    CHECK(same_sample(b1.samples[j], b2.samples[j]));
}

TEST_CASE("draw_clean: invalid configurations are rejected") {
  Signal sig = make_signal({1.0});
  NoiseSpec bad_t;
  bad_t.family = NoiseFamily::student_t;
  bad_t.df = 4.0;
  bad_t.sigma = 1.0;
  CHECK_THROWS_AS(draw_clean(10, sig, bad_t, 1), std::invalid_argument);

  NoiseSpec bad_pareto;
  bad_pareto.family = NoiseFamily::scaled_pareto;
  bad_pareto.shape = 3.0;
  bad_pareto.sigma = 1.0;
  CHECK_THROWS_AS(draw_clean(10, sig, bad_pareto, 1), std::invalid_argument);

  NoiseSpec ok;
  CHECK_THROWS_AS(draw_clean(0, sig, ok, 1), std::invalid_argument);

  Signal zero{Vector::Zero(3)};
  CHECK_THROWS_AS(draw_clean(10, zero, ok, 1), std::invalid_argument);
}

TEST_CASE("draw_clean: E[y] = ||x*||^2 at n=1, x*=(2)") {
  Signal sig = make_signal({2.0});
  NoiseSpec noise;
  noise.sigma = 1.0;
  const int m = 1000000;
  Batch b = draw_clean(m, sig, noise, 2024);
  double sum = 0.0, sumsq = 0.0;
  for (const auto& s : b.samples) {
    sum += s.y;
    sumsq += s.y * s.y;
  }
  double mean = sum / m;
  double se = std::sqrt((sumsq / m - mean * mean) / m);
  CHECK(std::abs(mean - 4.0) <= 3.0 * se);
}

TEST_CASE("draw_clean: covariates are standard normal (mean 0, covariance I)") {
  const int m = 100000, n = 10;
  Signal sig{Vector::Ones(n)};
  NoiseSpec noise;
  Batch b = draw_clean(m, sig, noise, 7);
  Vector mean = Vector::Zero(n);
  Matrix second = Matrix::Zero(n, n);
  for (const auto& s : b.samples) {
    mean += s.a;
    second += s.a * s.a.transpose();
  }
  mean /= m;
  second /= m;
  double se_mean = 1.0 / std::sqrt(static_cast<double>(m));
  for (int i = 0; i < n; ++i) CHECK(std::abs(mean[i]) <= 4.0 * se_mean);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double target = i == j ? 1.0 : 0.0;
      double se = (i == j ? std::sqrt(2.0) : 1.0) / std::sqrt(static_cast<double>(m));
      CHECK(std::abs(second(i, j) - target) <= 4.0 * se);
    }
  }
}

TEST_CASE("noise families match their configured mean and sd") {
  const int m = 400000;
  for (auto family : {NoiseFamily::gaussian, NoiseFamily::student_t,
                      NoiseFamily::scaled_pareto}) {
    NoiseSpec noise;
    noise.family = family;
    noise.mean = -1.25;
    noise.sigma = 0.8;
    noise.df = 4.5;
    noise.shape = 4.2;
    RngStream rng(55);
    double sum = 0, sumsq = 0;
    for (int i = 0; i < m; ++i) {
      double z = noise.draw(rng);
      sum += z;
      sumsq += z * z;
    }
    double mean = sum / m;
    double var = sumsq / m - mean * mean;
    CAPTURE(static_cast<int>(family));
    CHECK(std::abs(mean - noise.mean) < 0.02);
    // Fourth moments are barely finite for the tail stressors; the variance
    // estimate converges slowly, so the tolerance is loose.
    CHECK(std::abs(std::sqrt(var) - noise.sigma) < 0.1);
  }
}

TEST_CASE("noise: central fourth moment accessor") {
  NoiseSpec g;
  g.sigma = 2.0;
  CHECK(g.central_fourth_moment() == doctest::Approx(48.0));  // 3 sigma^4
  NoiseSpec t;
  t.family = NoiseFamily::student_t;
  t.sigma = 1.0;
  t.df = 4.5;
  CHECK(t.central_fourth_moment() == doctest::Approx(15.0));  // 3 + 6/(df-4)
  NoiseSpec z;
  z.family = NoiseFamily::point_mass_zero;
  CHECK(z.central_fourth_moment() == 0.0);
  Signal sig{Vector::Constant(1, 2.0)};
  CHECK(sig.snr(2.0) == doctest::Approx(2.0));
}

TEST_CASE("corrupt: epsilon = 0 is a pure shuffle") {
  Signal sig = make_signal({1.0, -1.0});
  NoiseSpec noise;
  noise.sigma = 0.3;
  Batch b = draw_clean(40, sig, noise, 11);
  AdversarySpec adv;
  adv.kind = AdversaryKind::response_spike;
  adv.epsilon = 0.0;
  adv.magnitude = 100.0;
  Batch out = corrupt(b, adv, 12);
  CHECK(out.corrupted_count() == 0);
  CHECK(permutation_equal(b, out));
}

TEST_CASE("corrupt: replaces exactly floor(eps*m) samples") {
  Signal sig = make_signal({1.0, 0.0, 0.0});
  NoiseSpec noise;
  Batch b = draw_clean(10, sig, noise, 3);
  AdversarySpec adv;
  adv.kind = AdversaryKind::response_spike;
  adv.epsilon = 0.25;
  adv.magnitude = 5.0;
  Batch out = corrupt(b, adv, 4);
  CHECK(out.corrupted_count() == 2);  // floor(0.25 * 10)

  for (double eps : {0.0, 0.049, 0.1, 0.33, 0.49}) {
    for (int m : {7, 24, 101}) {
      Batch big = draw_clean(m, sig, noise, 17 + m);
      adv.epsilon = eps;
      Batch c = corrupt(big, adv, 18);
      CHECK(c.corrupted_count() == static_cast<int>(std::floor(eps * m)));
      CHECK(c.size() == m);
      CHECK(c.dim() == 3);
    }
  }
}

TEST_CASE("corrupt: direction_plant places a = L*v, y = L^2") {
  const int n = 4;
  Signal sig{Vector::Ones(n)};
  NoiseSpec noise;
  Batch b = draw_clean(20, sig, noise, 5);
  AdversarySpec adv;
  adv.kind = AdversaryKind::direction_plant;
  adv.epsilon = 0.2;
  adv.plant_scale = 7.0;
  adv.plant_direction = Vector::Zero(n);
  adv.plant_direction[1] = 1.0;
  Batch out = corrupt(b, adv, 6);
  int planted = 0;
  for (const auto& s : out.samples) {
    if (!s.corrupted) continue;
    ++planted;
    CHECK(s.a == 7.0 * adv.plant_direction);
    CHECK(s.y == 49.0);
  }
  CHECK(planted == 4);
}

TEST_CASE("corrupt: response_spike keeps the covariate") {
  Signal sig = make_signal({2.0, 1.0});
  NoiseSpec noise;
  Batch b = draw_clean(30, sig, noise, 8);
  AdversarySpec adv;
  adv.kind = AdversaryKind::response_spike;
  adv.epsilon = 0.1;
  adv.magnitude = -123.0;
  Batch out = corrupt(b, adv, 9);
  int spiked = 0;
  for (const auto& s : out.samples) {
    if (s.corrupted) {
      ++spiked;
      CHECK(s.y == -123.0);
    }
  }
  CHECK(spiked == 3);
}

TEST_CASE("corrupt: sign_flip_largest flips the k largest |y|") {
  Signal sig = make_signal({1.0});
  NoiseSpec noise;
  Batch b = draw_clean(20, sig, noise, 21);
  std::vector<double> mags;
  for (const auto& s : b.samples) mags.push_back(std::abs(s.y));
  std::sort(mags.rbegin(), mags.rend());

  AdversarySpec adv;
  adv.kind = AdversaryKind::sign_flip_largest;
  adv.epsilon = 0.15;  // k = 3
  Batch out = corrupt(b, adv, 22);
  int flips = 0;
  for (const auto& s : out.samples) {
    if (s.corrupted) {
      ++flips;
      CHECK(std::abs(s.y) >= mags[2] - 1e-12);
      CHECK(s.y <= 0.0);  // clean responses here are nonnegative squares
    }
  }
  CHECK(flips == 3);
}

TEST_CASE("corrupt: replace_iid draws responses from the alternative law") {
  Signal sig = make_signal({1.0, 1.0});
  NoiseSpec noise;
  Batch b = draw_clean(50, sig, noise, 31);
  AdversarySpec adv;
  adv.kind = AdversaryKind::replace_iid;
  adv.epsilon = 0.2;
  adv.alt_noise.family = NoiseFamily::gaussian;
  adv.alt_noise.mean = 1000.0;
  adv.alt_noise.sigma = 1.0;
  Batch out = corrupt(b, adv, 32);
  int replaced = 0;
  for (const auto& s : out.samples) {
    if (s.corrupted) {
      ++replaced;
      CHECK(s.y > 900.0);
    }
  }
  CHECK(replaced == 10);
}

TEST_CASE("corrupt: empty batch is rejected") {
  AdversarySpec adv;
  CHECK_THROWS_AS(corrupt(Batch{}, adv, 1), std::invalid_argument);
}

TEST_CASE("pair_transform: worked example") {
  Batch b;
  Sample s1, s2;
  s1.a = Vector(2);
  s1.a << 1.0, 0.0;
  s1.y = 5.0;
  s2.a = Vector(2);
  s2.a << 0.0, 1.0;
  s2.y = 1.0;
  b.samples = {s1, s2};
  PairedBatch p = pair_transform(b);
  REQUIRE(p.size() == 1);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(p.samples[0].b[0] == doctest::Approx(r));
  CHECK(p.samples[0].b[1] == doctest::Approx(r));
  CHECK(p.samples[0].c[0] == doctest::Approx(r));
  CHECK(p.samples[0].c[1] == doctest::Approx(-r));
  CHECK(p.samples[0].upsilon == 2.0);
}

TEST_CASE("pair_transform: identical pair collapses to c = 0, upsilon = 0") {
  Batch b;
  Sample s;
  s.a = Vector(3);
  s.a << 1.0, 2.0, -0.5;
  s.y = 7.0;
  b.samples = {s, s};
  PairedBatch p = pair_transform(b);
  CHECK(p.samples[0].c.norm() == 0.0);
  CHECK(p.samples[0].upsilon == 0.0);
}

TEST_CASE("pair_transform: odd batch size is rejected") {
  Batch b;
  Sample s;
  s.a = Vector::Ones(2);
  b.samples = {s, s, s};
  CHECK_THROWS_AS(pair_transform(b), std::invalid_argument);
}

TEST_CASE("pair_transform: b + c and b - c recover the parents") {
  Signal sig = make_signal({1.0, -2.0, 0.5, 3.0});
  NoiseSpec noise;
  noise.sigma = 0.2;
  Batch b = draw_clean(60, sig, noise, 41);
  PairedBatch p = pair_transform(b);
  const double s2 = std::sqrt(2.0);
  for (int j = 0; j < p.size(); ++j) {
    CHECK((p.samples[j].b + p.samples[j].c - s2 * b.samples[j].a).norm() <=
          1e-14 * b.samples[j].a.norm());
    CHECK((p.samples[j].b - p.samples[j].c - s2 * b.samples[30 + j].a).norm() <=
          1e-14 * b.samples[30 + j].a.norm());
  }
}

TEST_CASE("pair_transform: corruption flags OR and stay below 2*eps") {
  Signal sig = make_signal({1.0, 1.0});
  NoiseSpec noise;
  Batch b = draw_clean(200, sig, noise, 51);
  AdversarySpec adv;
  adv.kind = AdversaryKind::response_spike;
  adv.epsilon = 0.1;
  adv.magnitude = 50.0;
  Batch c = corrupt(b, adv, 52);
  PairedBatch p = pair_transform(c);
  CHECK(p.corrupted_count() <= 2 * c.corrupted_count());
  int expected = 0;
  for (int j = 0; j < p.size(); ++j) {
    bool either = c.samples[j].corrupted || c.samples[100 + j].corrupted;
    CHECK(p.samples[j].corrupted == either);
    expected += either ? 1 : 0;
  }
  CHECK(p.corrupted_count() == expected);
}

TEST_CASE("pair_transform: b and c entries are uncorrelated on clean data") {
  const int m = 200000, n = 2;
  Signal sig{Vector::Ones(n)};
  NoiseSpec noise;
  Batch b = draw_clean(m, sig, noise, 61);
  PairedBatch p = pair_transform(b);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      double sum = 0, sumsq = 0;
      for (const auto& s : p.samples) {
        double v = s.b[i] * s.c[k];
        sum += v;
        sumsq += v * v;
      }
      double mean = sum / p.size();
      double se = std::sqrt((sumsq / p.size() - mean * mean) / p.size());
      CHECK(std::abs(mean) <= 4.0 * se);
    }
  }
}

TEST_CASE("dump_csv writes one row per sample") {
  Signal sig = make_signal({1.0, 2.0});
  NoiseSpec noise;
  Batch b = draw_clean(5, sig, noise, 71);
  b.samples[2].corrupted = true;
  std::ostringstream os;
  dump_csv(b, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "index,corrupted,y,a_0,a_1");
  int rows = 0, corrupted = 0;
  while (std::getline(is, line)) {
    ++rows;
    if (line.find(",1,") == 1) ++corrupted;
  }
  CHECK(rows == 5);
  CHECK(corrupted == 1);
}
