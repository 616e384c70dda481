#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "rpr/descent.hpp"
#include "rpr/init.hpp"
#include "rpr/risk.hpp"
#include "rpr/types.hpp"

namespace rpr {

// Either an explicit vector or a random unit vector times scale (drawn from
// the experiment's signal substream).
struct SignalSpec {
  Vector explicit_x;  // used when nonempty
  double scale = 1.0;

  Signal realize(int n, std::uint64_t seed) const;
};

struct ExperimentConfig {
  int n = 0;
  SignalSpec signal;
  NoiseSpec noise;
  AdversarySpec adversary;
  ModelVariant variant = ModelVariant::zero_mean;
  InitConfig init;
  DescentParams descent;
  int trials = 1;
  std::uint64_t seed = 0;
  std::string output_dir;
  double success_threshold = 0.1;  // relative dist
  EstimatorTuning estimators;

  void validate() const;
  // Propagates shared fields (epsilon, variant, tuning) into init/descent.
  void sync_subconfigs();
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

struct TrialReport {
  int trial_index = 0;
  double x0_dist = 0.0;
  double final_dist = 0.0;
  double plateau_dist = 0.0;  // median dist over the last quarter of iterations
  bool success = false;
  bool degenerate_init = false;
  double wall_time_ms = 0.0;
  int filter_removed_total = 0;
};

struct RunSummary {
  std::string config_hash;
  int trials = 0;
  double success_rate = 0.0;
  double dist_median = 0.0;
  double dist_q10 = 0.0;
  double dist_q90 = 0.0;
  std::vector<TrialReport> reports;

  // Deterministic given (config, seed): wall times are excluded.
  nlohmann::json to_json() const;
};

// Full pipeline: per trial, draw + corrupt an init batch, spectral_init, then
// stream T fresh corrupted batches into solve. Writes traces.csv and
// summary.json under output_dir when it is nonempty. Trials run concurrently
// up to the jobs limit (env RPR_JOBS when jobs = 0).
RunSummary run(const ExperimentConfig& cfg, int jobs = 0);

// traces.csv columns, one row per (trial, t).
inline constexpr const char* kTraceHeader =
    "trial,t,dist,grad_norm,removed_count,eta,elapsed_ms";

struct MomentCheckRow {
  MomentKind kind;
  int coordinate = -1;  // cov_upsilon_ci_b is checked per coordinate
  int components = 0;
  double max_abs_z = 0.0;
  double closed_at_worst = 0.0;
  double mc_at_worst = 0.0;
};

struct MomentTable {
  std::vector<MomentCheckRow> rows;
  double max_abs_z = 0.0;
  // Trace/opnorm bound checks of the gradient-point covariance, evaluated
  // when x lies in the respective balls.
  bool bounds_checked_zero_mean = false;
  bool bounds_ok_zero_mean = true;
  bool bounds_checked_paired = false;
  bool bounds_ok_paired = true;
  double elapsed_s = 0.0;

  bool pass(double z_threshold) const;
};

// Monte-Carlo verification of every MomentKind against its closed form.
// z-scores are componentwise, with empirical standard errors.
MomentTable verify_moments(const Vector& x, const Signal& signal,
                           const NoiseSpec& noise, long draws,
                           std::uint64_t seed);

void print_moment_table(const MomentTable& table, std::ostream& os);

struct SweepGrid {
  std::vector<double> epsilon;
  std::vector<double> sigma;
  std::vector<int> n;
  std::vector<int> m_tilde;
};

SweepGrid grid_from_json(const nlohmann::json& j);

// Cartesian product over the grid; one CSV row per (point, trial) plus an
// aggregate row (trial = -1) with medians per point. Partial failures are
// recorded in the row and the sweep continues.
void sweep(const SweepGrid& grid, const ExperimentConfig& base, std::ostream& csv,
           int jobs = 0);

}  // namespace rpr
