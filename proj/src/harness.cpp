#include "rpr/harness.hpp"

#include <Eigen/Eigenvalues>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "rpr/model.hpp"
#include "rpr/version.hpp"

namespace rpr {

namespace {

// Substream phase tags (documented hash: derive_stream chains splitmix64).
constexpr std::uint64_t kPhaseSignal = 1;
constexpr std::uint64_t kPhaseInitDraw = 2;
constexpr std::uint64_t kPhaseInitCorrupt = 3;
constexpr std::uint64_t kPhaseDescentDraw = 4;
constexpr std::uint64_t kPhaseDescentCorrupt = 5;

double quantile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  // NaNs (diverged trials) sort last so the comparator stays a strict weak order.
  std::sort(v.begin(), v.end(), [](double a, double b) {
    if (std::isnan(a)) return false;
    if (std::isnan(b)) return true;
    return a < b;
  });
  double pos = p * (v.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  double frac = pos - lo;
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

double plateau_of(const std::vector<double>& dist_curve) {
  if (dist_curve.empty()) return 0.0;
  std::size_t k = std::max<std::size_t>(1, dist_curve.size() / 4);
  std::vector<double> tail(dist_curve.end() - k, dist_curve.end());
  return quantile(std::move(tail), 0.5);
}

int resolve_jobs(int jobs, int trials) {
  if (jobs <= 0) {
    const char* env = std::getenv("RPR_JOBS");
    jobs = env != nullptr ? std::atoi(env) : 1;
  }
  return std::max(1, std::min(jobs, trials));
}

class PipelineSource : public BatchSource {
 public:
  PipelineSource(const ExperimentConfig& cfg, const Signal& signal, int trial)
      : cfg_(cfg), signal_(signal), trial_(trial) {}

  Batch next() override {
    const int m_raw = cfg_.variant == ModelVariant::paired
                          ? 2 * cfg_.descent.m_tilde
                          : cfg_.descent.m_tilde;
    std::uint64_t t = t_++;
    Batch b = draw_clean(
        m_raw, signal_, cfg_.noise,
        derive_stream(cfg_.seed, {static_cast<std::uint64_t>(trial_),
                                  kPhaseDescentDraw, t}),
        cfg_.seed);
    return corrupt(b, cfg_.adversary,
                   derive_stream(cfg_.seed, {static_cast<std::uint64_t>(trial_),
                                             kPhaseDescentCorrupt, t}));
  }

 private:
  const ExperimentConfig& cfg_;
  const Signal& signal_;
  int trial_;
  std::uint64_t t_ = 0;
};

std::string noise_family_name(NoiseFamily f) {
  switch (f) {
    case NoiseFamily::gaussian: return "gaussian";
    case NoiseFamily::student_t: return "student_t";
    case NoiseFamily::scaled_pareto: return "scaled_pareto";
    case NoiseFamily::point_mass_zero: return "point_mass_zero";
  }
  return "?";
}

NoiseFamily noise_family_from(const std::string& s) {
  if (s == "gaussian") return NoiseFamily::gaussian;
  if (s == "student_t") return NoiseFamily::student_t;
  if (s == "scaled_pareto") return NoiseFamily::scaled_pareto;
  if (s == "point_mass_zero") return NoiseFamily::point_mass_zero;
  throw std::invalid_argument("unknown noise family: " + s);
}

std::string adversary_kind_name(AdversaryKind k) {
  switch (k) {
    case AdversaryKind::none: return "none";
    case AdversaryKind::response_spike: return "response_spike";
    case AdversaryKind::direction_plant: return "direction_plant";
    case AdversaryKind::sign_flip_largest: return "sign_flip_largest";
    case AdversaryKind::replace_iid: return "replace_iid";
  }
  return "?";
}

AdversaryKind adversary_kind_from(const std::string& s) {
  if (s == "none") return AdversaryKind::none;
  if (s == "response_spike") return AdversaryKind::response_spike;
  if (s == "direction_plant") return AdversaryKind::direction_plant;
  if (s == "sign_flip_largest") return AdversaryKind::sign_flip_largest;
  if (s == "replace_iid") return AdversaryKind::replace_iid;
  throw std::invalid_argument("unknown adversary kind: " + s);
}

NoiseSpec noise_from_json(const nlohmann::json& j) {
  NoiseSpec n;
  if (j.contains("family")) n.family = noise_family_from(j["family"]);
  n.mean = j.value("mean", 0.0);
  n.sigma = j.value("sigma", 0.0);
  n.df = j.value("df", 0.0);
  n.shape = j.value("shape", 0.0);
  return n;
}

nlohmann::json noise_to_json(const NoiseSpec& n) {
  nlohmann::json j;
  j["family"] = noise_family_name(n.family);
  j["mean"] = n.mean;
  j["sigma"] = n.sigma;
  if (n.family == NoiseFamily::student_t) j["df"] = n.df;
  if (n.family == NoiseFamily::scaled_pareto) j["shape"] = n.shape;
  return j;
}

}  // namespace

Signal SignalSpec::realize(int n, std::uint64_t seed) const {
  Signal s;
  if (explicit_x.size() > 0) {
    s.x_star = explicit_x;
  } else {
    RngStream rng(derive_stream(seed, {kPhaseSignal}));
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.normal();
    s.x_star = scale * v.normalized();
  }
  s.validate();
  return s;
}

void ExperimentConfig::validate() const {
  if (signal.explicit_x.size() == 0 && n < 1)
    throw std::invalid_argument("config: n must be >= 1");
  if (signal.explicit_x.size() > 0 && n != signal.explicit_x.size())
    throw std::invalid_argument("config: n does not match the explicit signal");
  if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (!(success_threshold > 0.0))
    throw std::invalid_argument("config: success_threshold must be positive");
  noise.validate();
  adversary.validate(n);
  if (init.m0 < 1) throw std::invalid_argument("config: init.m0 must be >= 1");
  if (descent.m_tilde < 1)
    throw std::invalid_argument("config: descent.m_tilde must be >= 1");
  if (descent.T < 0) throw std::invalid_argument("config: descent.T must be >= 0");
}

void ExperimentConfig::sync_subconfigs() {
  init.variant = variant;
  descent.variant = variant;
  init.epsilon = adversary.epsilon;
  descent.epsilon = adversary.epsilon;
  init.tuning = estimators;
  descent.tuning = estimators;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.n = j.value("n", 0);
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.trials = j.value("trials", 1);
  cfg.output_dir = j.value("output_dir", std::string{});
  cfg.success_threshold = j.value("success_threshold", 0.1);
  std::string variant = j.value("variant", std::string{"zero_mean"});
  if (variant != "zero_mean" && variant != "paired")
    throw std::invalid_argument("unknown variant: " + variant);
  cfg.variant = variant == "paired" ? ModelVariant::paired : ModelVariant::zero_mean;

  if (j.contains("signal")) {
    const auto& js = j["signal"];
    if (js.contains("values")) {
      auto vals = js["values"].get<std::vector<double>>();
      cfg.signal.explicit_x = Eigen::Map<Vector>(vals.data(), vals.size());
      if (cfg.n == 0) cfg.n = static_cast<int>(vals.size());
    }
    cfg.signal.scale = js.value("scale", 1.0);
  }

  if (j.contains("noise")) cfg.noise = noise_from_json(j["noise"]);

  if (j.contains("adversary")) {
    const auto& ja = j["adversary"];
    if (ja.contains("kind")) cfg.adversary.kind = adversary_kind_from(ja["kind"]);
    cfg.adversary.epsilon = ja.value("epsilon", 0.0);
    cfg.adversary.magnitude = ja.value("magnitude", 0.0);
    cfg.adversary.plant_scale = ja.value("plant_scale", 0.0);
    if (ja.contains("plant_direction")) {
      auto vals = ja["plant_direction"].get<std::vector<double>>();
      cfg.adversary.plant_direction = Eigen::Map<Vector>(vals.data(), vals.size());
    }
    if (ja.contains("alt_noise")) cfg.adversary.alt_noise = noise_from_json(ja["alt_noise"]);
  }

  if (j.contains("init")) {
    const auto& ji = j["init"];
    std::string conf = ji.value("configuration", std::string{"mean_est"});
    if (conf == "mean_est") cfg.init.configuration = InitEstimator::mean_est;
    else if (conf == "cov_est") cfg.init.configuration = InitEstimator::cov_est;
    else throw std::invalid_argument("unknown init configuration: " + conf);
    cfg.init.m0 = ji.value("m0", 0);
    cfg.init.delta = ji.value("delta", 0.05);
    cfg.init.naive = ji.value("naive", false);
  }

  if (j.contains("descent")) {
    const auto& jd = j["descent"];
    cfg.descent.T = jd.value("T", 1);
    cfg.descent.m_tilde = jd.value("m_tilde", 0);
    cfg.descent.delta = jd.value("delta", 0.05);
    cfg.descent.naive = jd.value("naive", false);
    if (jd.contains("eta") && !jd["eta"].is_null())
      cfg.descent.eta_override = jd["eta"].get<double>();
  }

  if (j.contains("estimators")) {
    const auto& je = j["estimators"];
    cfg.estimators.theta = je.value("theta", 9.0);
    cfg.estimators.c1 = je.value("c1", 1.0);
    cfg.estimators.removal_divisor = je.value("removal_divisor", 4.0);
    cfg.estimators.budget_factor = je.value("budget_factor", 4.0);
    cfg.estimators.block_count = je.value("block_count", 0);
  }

  cfg.sync_subconfigs();
  return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["n"] = cfg.n;
  j["seed"] = cfg.seed;
  j["trials"] = cfg.trials;
  j["output_dir"] = cfg.output_dir;
  j["success_threshold"] = cfg.success_threshold;
  j["variant"] = cfg.variant == ModelVariant::paired ? "paired" : "zero_mean";

  nlohmann::json js;
  if (cfg.signal.explicit_x.size() > 0) {
    js["values"] = std::vector<double>(
        cfg.signal.explicit_x.data(),
        cfg.signal.explicit_x.data() + cfg.signal.explicit_x.size());
  }
  js["scale"] = cfg.signal.scale;
  j["signal"] = js;

  j["noise"] = noise_to_json(cfg.noise);

  nlohmann::json ja;
  ja["kind"] = adversary_kind_name(cfg.adversary.kind);
  ja["epsilon"] = cfg.adversary.epsilon;
  if (cfg.adversary.kind == AdversaryKind::response_spike)
    ja["magnitude"] = cfg.adversary.magnitude;
  if (cfg.adversary.kind == AdversaryKind::direction_plant) {
    ja["plant_scale"] = cfg.adversary.plant_scale;
    ja["plant_direction"] = std::vector<double>(
        cfg.adversary.plant_direction.data(),
        cfg.adversary.plant_direction.data() + cfg.adversary.plant_direction.size());
  }
  if (cfg.adversary.kind == AdversaryKind::replace_iid)
    ja["alt_noise"] = noise_to_json(cfg.adversary.alt_noise);
  j["adversary"] = ja;

  nlohmann::json ji;
  ji["configuration"] =
      cfg.init.configuration == InitEstimator::mean_est ? "mean_est" : "cov_est";
  ji["m0"] = cfg.init.m0;
  ji["delta"] = cfg.init.delta;
  ji["naive"] = cfg.init.naive;
  j["init"] = ji;

  nlohmann::json jd;
  jd["T"] = cfg.descent.T;
  jd["m_tilde"] = cfg.descent.m_tilde;
  jd["delta"] = cfg.descent.delta;
  jd["naive"] = cfg.descent.naive;
  if (cfg.descent.eta_override.has_value()) jd["eta"] = *cfg.descent.eta_override;
  else jd["eta"] = nullptr;
  j["descent"] = jd;

  nlohmann::json je;
  je["theta"] = cfg.estimators.theta;
  je["c1"] = cfg.estimators.c1;
  je["removal_divisor"] = cfg.estimators.removal_divisor;
  je["budget_factor"] = cfg.estimators.budget_factor;
  je["block_count"] = cfg.estimators.block_count;
  j["estimators"] = je;

  return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
  // FNV-1a over the canonical dump (nlohmann keeps object keys sorted).
  std::string dump = config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

nlohmann::json RunSummary::to_json() const {
  nlohmann::json j;
  j["config_hash"] = config_hash;
  j["artifact_version"] = kArtifactVersion;
  j["trials"] = trials;
  j["success_rate"] = success_rate;
  j["dist_median"] = dist_median;
  j["dist_q10"] = dist_q10;
  j["dist_q90"] = dist_q90;
  return j;
}

RunSummary run(const ExperimentConfig& config, int jobs) {
  ExperimentConfig cfg = config;
  cfg.sync_subconfigs();
  cfg.validate();
  const Signal signal = cfg.signal.realize(cfg.n, cfg.seed);

  std::vector<TrialReport> reports(cfg.trials);
  std::vector<DescentTrace> traces(cfg.trials);

  auto run_trial = [&](int t) {
    auto t0 = std::chrono::steady_clock::now();
    TrialReport r;
    r.trial_index = t;
    try {
      const int m_raw = cfg.variant == ModelVariant::paired ? 2 * cfg.init.m0
                                                            : cfg.init.m0;
      Batch batch = draw_clean(
          m_raw, signal, cfg.noise,
          derive_stream(cfg.seed, {static_cast<std::uint64_t>(t), kPhaseInitDraw}),
          cfg.seed);
      batch = corrupt(batch, cfg.adversary,
                      derive_stream(cfg.seed, {static_cast<std::uint64_t>(t),
                                               kPhaseInitCorrupt}));
      InitResult ir = spectral_init(batch, cfg.init);
      r.x0_dist = dist(ir.x0, signal.x_star);
      r.filter_removed_total = ir.filter_removed_total;
      if (ir.degenerate) {
        r.degenerate_init = true;
        r.final_dist = r.x0_dist;
        r.plateau_dist = r.x0_dist;
        r.success = false;
      } else {
        PipelineSource source(cfg, signal, t);
        traces[t] = solve(ir.x0, source, cfg.descent, &signal.x_star);
        for (const auto& rep : traces[t].filter_reports)
          r.filter_removed_total += rep.removed_count;
        r.final_dist = traces[t].dist_curve.back();
        r.plateau_dist = plateau_of(traces[t].dist_curve);
        r.success = r.final_dist <= cfg.success_threshold * signal.norm();
      }
    } catch (const std::exception&) {
      // A diverged trial (non-finite iterates) counts as a failure; the run
      // continues, like the degenerate-init path.
      r.final_dist = std::numeric_limits<double>::quiet_NaN();
      r.plateau_dist = r.final_dist;
      r.success = false;
      traces[t] = DescentTrace{};
    }
    auto t1 = std::chrono::steady_clock::now();
    r.wall_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    reports[t] = r;
  };

  const int njobs = resolve_jobs(jobs, cfg.trials);
  if (njobs <= 1) {
    for (int t = 0; t < cfg.trials; ++t) run_trial(t);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(njobs);
    for (int w = 0; w < njobs; ++w) {
      pool.emplace_back([&] {
        int t;
        while ((t = next.fetch_add(1)) < cfg.trials) run_trial(t);
      });
    }
    for (auto& th : pool) th.join();
  }

  RunSummary summary;
  summary.config_hash = rpr::config_hash(cfg);
  summary.trials = cfg.trials;
  std::vector<double> finals;
  int successes = 0;
  for (const auto& r : reports) {
    finals.push_back(r.final_dist);
    successes += r.success ? 1 : 0;
  }
  summary.success_rate = static_cast<double>(successes) / cfg.trials;
  summary.dist_median = quantile(finals, 0.5);
  summary.dist_q10 = quantile(finals, 0.1);
  summary.dist_q90 = quantile(finals, 0.9);
  summary.reports = reports;

  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream csv(cfg.output_dir + "/traces.csv");
    csv << "# config_hash=" << summary.config_hash
        << " version=" << kArtifactVersion << "\n";
    csv << kTraceHeader << "\n";
    csv << std::setprecision(12);
    for (int t = 0; t < cfg.trials; ++t) {
      const auto& tr = traces[t];
      if (reports[t].degenerate_init) {
        csv << t << ",0," << reports[t].x0_dist << ",0,0,0,0\n";
        continue;
      }
      for (std::size_t i = 0; i < tr.dist_curve.size(); ++i) {
        double gnorm = i == 0 ? 0.0 : tr.grad_norms[i - 1];
        int removed = i == 0 ? 0 : tr.filter_reports[i - 1].removed_count;
        double ms = i == 0 ? 0.0 : tr.elapsed_ms[i - 1];
        csv << t << "," << i << "," << tr.dist_curve[i] << "," << gnorm << ","
            << removed << "," << tr.eta << "," << ms << "\n";
      }
    }
    std::ofstream js(cfg.output_dir + "/summary.json");
    js << summary.to_json().dump(2) << "\n";
  }
  return summary;
}

// ---------------------------------------------------------------------------
// verify-moments
// ---------------------------------------------------------------------------

namespace {

// Componentwise mean accumulator with empirical standard errors.
struct Acc {
  Matrix sum;
  Matrix sumsq;
  long count = 0;

  void init(Eigen::Index r, Eigen::Index c) {
    sum = Matrix::Zero(r, c);
    sumsq = Matrix::Zero(r, c);
  }
  void add(const Matrix& q) {
    sum += q;
    sumsq += q.cwiseProduct(q);
    ++count;
  }
};

struct ZResult {
  double max_abs_z = 0.0;
  double closed_at_worst = 0.0;
  double mc_at_worst = 0.0;
};

ZResult z_against(const Acc& acc, const Matrix& closed) {
  ZResult res;
  Matrix mean = acc.sum / acc.count;
  for (Eigen::Index i = 0; i < mean.rows(); ++i) {
    for (Eigen::Index j = 0; j < mean.cols(); ++j) {
      double var = acc.sumsq(i, j) / acc.count - mean(i, j) * mean(i, j);
      double se = std::sqrt(std::max(var, 0.0) / acc.count);
      double diff = mean(i, j) - closed(i, j);
      double z;
      if (se > 0.0) {
        z = diff / se;
      } else {
        z = std::abs(diff) <= 1e-9 * (1.0 + std::abs(closed(i, j))) ? 0.0 : 1e9;
      }
      if (std::abs(z) > std::abs(res.max_abs_z)) {
        res.max_abs_z = std::abs(z);
        res.closed_at_worst = closed(i, j);
        res.mc_at_worst = mean(i, j);
      }
    }
  }
  return res;
}

Matrix as_matrix(const MomentValue& v) {
  if (std::holds_alternative<double>(v)) {
    Matrix m(1, 1);
    m(0, 0) = std::get<double>(v);
    return m;
  }
  if (std::holds_alternative<Vector>(v)) return std::get<Vector>(v);
  return std::get<Matrix>(v);
}

}  // namespace

bool MomentTable::pass(double z_threshold) const {
  if (max_abs_z > z_threshold) return false;
  if (bounds_checked_zero_mean && !bounds_ok_zero_mean) return false;
  if (bounds_checked_paired && !bounds_ok_paired) return false;
  return true;
}

MomentTable verify_moments(const Vector& x, const Signal& signal,
                           const NoiseSpec& noise, long draws,
                           std::uint64_t seed) {
  if (draws < 10000)
    throw std::invalid_argument("verify_moments: draws must be >= 1e4");
  if (noise.mean != 0.0)
    throw std::invalid_argument("verify_moments: noise mean must be 0");
  noise.validate();
  signal.validate();
  const int n = signal.n();
  if (x.size() != n) throw std::invalid_argument("verify_moments: dim mismatch");
  auto t_start = std::chrono::steady_clock::now();

  const Vector& xs = signal.x_star;
  const double ns2 = signal.norm_sq();
  const double sigma = noise.sigma;
  const Vector grad_zero = pop_grad(x, signal, ModelVariant::zero_mean);
  const Vector grad_paired = pop_grad(x, signal, ModelVariant::paired);

  Acc a_ey, a_vary, a_egrad, a_eyaat, a_ex2, a_gradcov, a_covya;
  a_ey.init(1, 1);
  a_vary.init(1, 1);
  a_egrad.init(n, 1);
  a_eyaat.init(n, n);
  a_ex2.init(n, n);
  a_gradcov.init(n, n);
  a_covya.init(n, n);

  {
    RngStream rng(derive_stream(seed, {0x5a5a, 1}));
    Vector a(n);
    Matrix outer(n, n), q(n, n);
    Matrix one(1, 1);
    Vector p(n);
    for (long d = 0; d < draws; ++d) {
      for (int i = 0; i < n; ++i) a[i] = rng.normal();
      double z = noise.draw(rng);
      double as = a.dot(xs);
      double y = as * as + z;
      double ax = a.dot(x);

      one(0, 0) = y;
      a_ey.add(one);
      one(0, 0) = (y - ns2) * (y - ns2);
      a_vary.add(one);

      p = ((ax * ax - y) * ax) * a;
      a_egrad.add(p);

      outer.noalias() = a * a.transpose();
      q = y * outer;
      a_eyaat.add(q);
      q = (ax * ax) * (as * as * as * as) * outer;
      a_ex2.add(q);

      p -= grad_zero;
      q.noalias() = p * p.transpose();
      a_gradcov.add(q);

      q = (y * y) * outer;
      a_covya.add(q);
    }
  }

  Acc a_eubc, a_gradcov_p;
  std::vector<Acc> a_cov_ci(n);
  a_eubc.init(n, n);
  a_gradcov_p.init(n, n);
  for (int i = 0; i < n; ++i) a_cov_ci[i].init(n, n);

  {
    RngStream rng(derive_stream(seed, {0x5a5a, 2}));
    Vector b(n), c(n), p(n), v(n);
    Matrix q(n, n);
    for (long d = 0; d < draws; ++d) {
      for (int i = 0; i < n; ++i) b[i] = rng.normal();
      for (int i = 0; i < n; ++i) c[i] = rng.normal();
      double zeta = (noise.draw(rng) - noise.draw(rng)) / 2.0;
      double bs = b.dot(xs);
      double cs = c.dot(xs);
      double upsilon = bs * cs + zeta;

      q.noalias() = upsilon * (b * c.transpose());
      a_eubc.add(q);

      for (int i = 0; i < n; ++i) {
        v = (upsilon * c[i]) * b - xs[i] * xs;
        q.noalias() = v * v.transpose();
        a_cov_ci[i].add(q);
      }

      double bx = b.dot(x);
      double cx = c.dot(x);
      p = (bx * cx - upsilon) * (cx * b + bx * c) - grad_paired;
      q.noalias() = p * p.transpose();
      a_gradcov_p.add(q);
    }
  }

  MomentTable table;
  auto push = [&](MomentKind kind, const Acc& acc, int coord) {
    MomentCheckRow row;
    row.kind = kind;
    row.coordinate = coord;
    const Vector* px = moment_needs_x(kind) ? &x : nullptr;
    Matrix closed =
        as_matrix(moment_oracle(kind, px, signal, sigma, std::max(coord, 0)));
    row.components = static_cast<int>(closed.size());
    ZResult z = z_against(acc, closed);
    row.max_abs_z = z.max_abs_z;
    row.closed_at_worst = z.closed_at_worst;
    row.mc_at_worst = z.mc_at_worst;
    table.rows.push_back(row);
    table.max_abs_z = std::max(table.max_abs_z, row.max_abs_z);
  };

  push(MomentKind::e_y, a_ey, -1);
  push(MomentKind::var_y, a_vary, -1);
  push(MomentKind::e_grad, a_egrad, -1);
  push(MomentKind::e_y_aat, a_eyaat, -1);
  push(MomentKind::e_x2_xstar4_aat, a_ex2, -1);
  push(MomentKind::grad_cov, a_gradcov, -1);
  push(MomentKind::cov_ya, a_covya, -1);
  push(MomentKind::e_upsilon_bct, a_eubc, -1);
  for (int i = 0; i < n; ++i) push(MomentKind::cov_upsilon_ci_b, a_cov_ci[i], i);
  push(MomentKind::grad_cov_paired, a_gradcov_p, -1);

  // Trace/opnorm bounds on the closed-form gradient covariances.
  auto check_bounds = [&](ModelVariant variant, MomentKind kind, bool& checked,
                          bool& ok) {
    GradCovBounds b = grad_cov_bounds(x, signal, sigma, variant);
    if (!b.in_ball) return;
    Matrix cov = as_matrix(moment_oracle(kind, &x, signal, sigma));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    double opnorm = eig.eigenvalues().cwiseAbs().maxCoeff();
    checked = true;
    ok = cov.trace() <= b.trace_bound && opnorm <= b.opnorm_bound;
  };
  check_bounds(ModelVariant::zero_mean, MomentKind::grad_cov,
               table.bounds_checked_zero_mean, table.bounds_ok_zero_mean);
  check_bounds(ModelVariant::paired, MomentKind::grad_cov_paired,
               table.bounds_checked_paired, table.bounds_ok_paired);

  auto t_end = std::chrono::steady_clock::now();
  table.elapsed_s = std::chrono::duration<double>(t_end - t_start).count();
  return table;
}

void print_moment_table(const MomentTable& table, std::ostream& os) {
  os << std::left << std::setw(20) << "kind" << std::setw(7) << "coord"
     << std::setw(7) << "comps" << std::setw(12) << "max|z|" << std::setw(16)
     << "closed@worst" << std::setw(16) << "mc@worst"
     << "status\n";
  for (const auto& row : table.rows) {
    os << std::left << std::setw(20) << to_string(row.kind);
    if (row.coordinate >= 0)
      os << std::setw(7) << row.coordinate;
    else
      os << std::setw(7) << "-";
    os << std::setw(7) << row.components << std::setw(12) << std::setprecision(4)
       << row.max_abs_z << std::setw(16) << std::setprecision(8)
       << row.closed_at_worst << std::setw(16) << row.mc_at_worst
       << (row.max_abs_z <= 5.0 ? "ok" : "FAIL") << "\n";
  }
  if (table.bounds_checked_zero_mean)
    os << "grad_cov trace/opnorm bounds: "
       << (table.bounds_ok_zero_mean ? "ok" : "FAIL") << "\n";
  if (table.bounds_checked_paired)
    os << "grad_cov_paired trace/opnorm bounds: "
       << (table.bounds_ok_paired ? "ok" : "FAIL") << "\n";
  os << "max |z| = " << std::setprecision(4) << table.max_abs_z << ", elapsed "
     << std::setprecision(3) << table.elapsed_s << " s\n";
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

SweepGrid grid_from_json(const nlohmann::json& j) {
  SweepGrid g;
  if (j.contains("epsilon")) g.epsilon = j["epsilon"].get<std::vector<double>>();
  if (j.contains("sigma")) g.sigma = j["sigma"].get<std::vector<double>>();
  if (j.contains("n")) g.n = j["n"].get<std::vector<int>>();
  if (j.contains("m_tilde")) g.m_tilde = j["m_tilde"].get<std::vector<int>>();
  if (g.epsilon.empty() && g.sigma.empty() && g.n.empty() && g.m_tilde.empty())
    throw std::invalid_argument("sweep: empty grid");
  return g;
}

void sweep(const SweepGrid& grid, const ExperimentConfig& base, std::ostream& csv,
           int jobs) {
  std::vector<double> eps = grid.epsilon.empty()
                                ? std::vector<double>{base.adversary.epsilon}
                                : grid.epsilon;
  std::vector<double> sig =
      grid.sigma.empty() ? std::vector<double>{base.noise.sigma} : grid.sigma;
  std::vector<int> ns = grid.n.empty() ? std::vector<int>{base.n} : grid.n;
  std::vector<int> ms =
      grid.m_tilde.empty() ? std::vector<int>{base.descent.m_tilde} : grid.m_tilde;

  csv << "# config_hash=" << config_hash(base) << " version=" << kArtifactVersion
      << "\n";
  csv << "epsilon,sigma,n,m_tilde,trial,x0_dist,final_dist,plateau_dist,success,"
         "error\n";
  csv << std::setprecision(12);

  for (double e : eps) {
    for (double s : sig) {
      for (int n : ns) {
        for (int m : ms) {
          ExperimentConfig cfg = base;
          cfg.adversary.epsilon = e;
          cfg.noise.sigma = s;
          if (n != base.n) {
            cfg.n = n;
            cfg.signal.explicit_x = Vector();  // re-randomise at the new dim
          }
          cfg.descent.m_tilde = m;
          cfg.output_dir.clear();
          cfg.sync_subconfigs();
          auto prefix = [&](int trial) {
            csv << e << "," << s << "," << n << "," << m << "," << trial << ",";
          };
          try {
            RunSummary summary = run(cfg, jobs);
            std::vector<double> plateaus;
            std::vector<double> x0s, finals;
            for (const auto& r : summary.reports) {
              prefix(r.trial_index);
              csv << r.x0_dist << "," << r.final_dist << "," << r.plateau_dist
                  << "," << (r.success ? 1 : 0) << ",0\n";
              plateaus.push_back(r.plateau_dist);
              x0s.push_back(r.x0_dist);
              finals.push_back(r.final_dist);
            }
            prefix(-1);
            csv << quantile(x0s, 0.5) << "," << quantile(finals, 0.5) << ","
                << quantile(plateaus, 0.5) << "," << summary.success_rate
                << ",0\n";
          } catch (const std::exception&) {
            prefix(-1);
            csv << "nan,nan,nan,0,1\n";
          }
        }
      }
    }
  }
}

}  // namespace rpr
