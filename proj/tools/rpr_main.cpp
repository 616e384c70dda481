// rpr: robust phase retrieval experiments.
//
//   rpr run <config.json> [--jobs N] [--output-dir DIR]
//   rpr init [config.json] [--config mean|cov] [--variant zero-mean|paired]
//            [--m0 M] [--epsilon E] [--delta D] [--seed S] [--n N]
//            [--sigma SD] [-o x0.json]
//   rpr solve [config.json] [--variant ...] [--T T] [--m-tilde M]
//            [--epsilon E] [--delta D] [--eta ETA] [--seed S]
//            [--init auto|FILE] [-o trace.csv]
//   rpr verify-moments [--n N] [--sigma SD] [--draws K] [--seed S]
//            [--h-scale F]
//   rpr sweep <grid.json> [--jobs N] [-o out.csv]
//
// Flags mirror the config JSON keys; a positional config file supplies the
// experiment (signal, noise, adversary) and flags override scalar fields.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "rpr/harness.hpp"
#include "rpr/model.hpp"
#include "rpr/version.hpp"

namespace {

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

rpr::ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return rpr::config_from_json(nlohmann::json::object());
  return rpr::config_from_json(load_json(path));
}

struct CommonOverrides {
  std::string variant;
  int n = -1;
  double sigma = -1.0;
  double epsilon = -1.0;
  double delta = -1.0;
  std::uint64_t seed = 0;
  bool seed_set = false;

  void apply(rpr::ExperimentConfig& cfg) const {
    if (!variant.empty()) {
      if (variant == "zero-mean" || variant == "zero_mean")
        cfg.variant = rpr::ModelVariant::zero_mean;
      else if (variant == "paired")
        cfg.variant = rpr::ModelVariant::paired;
      else
        throw std::runtime_error("unknown variant: " + variant);
    }
    if (n > 0) cfg.n = n;
    if (sigma >= 0.0) cfg.noise.sigma = sigma;
    if (epsilon >= 0.0) cfg.adversary.epsilon = epsilon;
    if (delta > 0.0) {
      cfg.init.delta = delta;
      cfg.descent.delta = delta;
    }
    if (seed_set) cfg.seed = seed;
    cfg.sync_subconfigs();
  }
};

rpr::Batch draw_init_batch(const rpr::ExperimentConfig& cfg,
                           const rpr::Signal& signal) {
  const int m_raw = cfg.variant == rpr::ModelVariant::paired ? 2 * cfg.init.m0
                                                             : cfg.init.m0;
  rpr::Batch b = rpr::draw_clean(m_raw, signal, cfg.noise,
                                 rpr::derive_stream(cfg.seed, {0, 2}), cfg.seed);
  return rpr::corrupt(b, cfg.adversary, rpr::derive_stream(cfg.seed, {0, 3}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robust phase retrieval experiments"};
  app.set_version_flag("--version", rpr::kArtifactVersion);
  app.require_subcommand(1);

  // --- run ---
  auto* cmd_run = app.add_subcommand("run", "run a configured experiment");
  std::string run_config;
  std::string run_outdir;
  int run_jobs = 0;
  cmd_run->add_option("config", run_config, "experiment config JSON")->required();
  cmd_run->add_option("--jobs", run_jobs, "max concurrent trials");
  cmd_run->add_option("--output-dir,-o", run_outdir, "override output_dir");

  // --- init ---
  auto* cmd_init = app.add_subcommand("init", "spectral initialisation only");
  std::string init_config_file, init_out = "x0.json", init_estimator;
  int init_m0 = -1;
  CommonOverrides init_common;
  cmd_init->add_option("experiment", init_config_file, "experiment config JSON");
  cmd_init->add_option("--config", init_estimator, "estimator: mean|cov");
  cmd_init->add_option("--variant", init_common.variant, "zero-mean|paired");
  cmd_init->add_option("--m0", init_m0, "initialisation sample size");
  cmd_init->add_option("--epsilon", init_common.epsilon, "contamination level");
  cmd_init->add_option("--delta", init_common.delta, "confidence parameter");
  cmd_init->add_option("--n", init_common.n, "ambient dimension");
  cmd_init->add_option("--sigma", init_common.sigma, "noise standard deviation");
  auto* init_seed_opt =
      cmd_init->add_option("--seed", init_common.seed, "experiment seed");
  cmd_init->add_option("-o,--output", init_out, "output JSON path");

  // --- solve ---
  auto* cmd_solve = app.add_subcommand("solve", "robust gradient descent");
  std::string solve_config_file, solve_out = "trace.csv", solve_init = "auto";
  int solve_T = -1, solve_m = -1, solve_m0 = -1;
  double solve_eta = 0.0;
  bool solve_eta_set = false;
  CommonOverrides solve_common;
  cmd_solve->add_option("experiment", solve_config_file, "experiment config JSON");
  cmd_solve->add_option("--variant", solve_common.variant, "zero-mean|paired");
  cmd_solve->add_option("--T", solve_T, "iterations");
  cmd_solve->add_option("--m-tilde", solve_m, "per-iteration batch size");
  cmd_solve->add_option("--m0", solve_m0, "init sample size (with --init auto)");
  cmd_solve->add_option("--epsilon", solve_common.epsilon, "contamination level");
  cmd_solve->add_option("--delta", solve_common.delta, "confidence parameter");
  auto* solve_eta_opt =
      cmd_solve->add_option("--eta", solve_eta, "step size override");
  cmd_solve->add_option("--n", solve_common.n, "ambient dimension");
  cmd_solve->add_option("--sigma", solve_common.sigma, "noise standard deviation");
  auto* solve_seed_opt =
      cmd_solve->add_option("--seed", solve_common.seed, "experiment seed");
  cmd_solve->add_option("--init", solve_init, "auto | path to x0 JSON");
  cmd_solve->add_option("-o,--output", solve_out, "trace CSV path");

  // --- verify-moments ---
  auto* cmd_vm = app.add_subcommand("verify-moments",
                                    "closed forms vs Monte Carlo");
  int vm_n = 3;
  double vm_sigma = 1.0, vm_hscale = 0.1;
  long vm_draws = 1000000;
  std::uint64_t vm_seed = 1;
  cmd_vm->add_option("--n", vm_n, "dimension");
  cmd_vm->add_option("--sigma", vm_sigma, "noise standard deviation");
  cmd_vm->add_option("--draws", vm_draws, "Monte Carlo draws");
  cmd_vm->add_option("--seed", vm_seed, "rng seed");
  cmd_vm->add_option("--h-scale", vm_hscale,
                     "||x - x*|| as a fraction of ||x*||");

  // --- sweep ---
  auto* cmd_sweep = app.add_subcommand("sweep", "grid of experiments");
  std::string sweep_grid_file, sweep_out;
  int sweep_jobs = 0;
  cmd_sweep->add_option("grid", sweep_grid_file, "grid JSON with base config")
      ->required();
  cmd_sweep->add_option("--jobs", sweep_jobs, "max concurrent trials");
  cmd_sweep->add_option("-o,--output", sweep_out, "output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_run) {
      rpr::ExperimentConfig cfg = load_config(run_config);
      if (!run_outdir.empty()) cfg.output_dir = run_outdir;
      rpr::RunSummary summary = rpr::run(cfg, run_jobs);
      std::cout << summary.to_json().dump(2) << "\n";
      return 0;
    }

    if (*cmd_init) {
      rpr::ExperimentConfig cfg = load_config(init_config_file);
      if (!init_estimator.empty()) {
        if (init_estimator == "mean") cfg.init.configuration = rpr::InitEstimator::mean_est;
        else if (init_estimator == "cov") cfg.init.configuration = rpr::InitEstimator::cov_est;
        else throw std::runtime_error("--config must be mean or cov");
      }
      if (init_m0 > 0) cfg.init.m0 = init_m0;
      init_common.seed_set = init_seed_opt->count() > 0;
      init_common.apply(cfg);
      cfg.validate();
      rpr::Signal signal = cfg.signal.realize(cfg.n, cfg.seed);
      rpr::InitResult res = rpr::spectral_init(draw_init_batch(cfg, signal), cfg.init);

      nlohmann::json out;
      out["config_hash"] = rpr::config_hash(cfg);
      out["artifact_version"] = rpr::kArtifactVersion;
      out["x0"] = std::vector<double>(res.x0.data(), res.x0.data() + res.x0.size());
      out["degenerate"] = res.degenerate;
      out["y_tilde_sq"] = res.y_tilde_sq;
      out["top_eigenvalue"] = res.top_eigenvalue;
      out["power_converged"] = res.power_converged;
      out["dist_to_signal"] = rpr::dist(res.x0, signal.x_star);
      out["filter_removed_total"] = res.filter_removed_total;
      std::ofstream of(init_out);
      of << out.dump(2) << "\n";
      std::cout << out.dump(2) << "\n";
      return 0;
    }

    if (*cmd_solve) {
      rpr::ExperimentConfig cfg = load_config(solve_config_file);
      if (solve_T >= 0) cfg.descent.T = solve_T;
      if (solve_m > 0) cfg.descent.m_tilde = solve_m;
      if (solve_m0 > 0) cfg.init.m0 = solve_m0;
      solve_common.seed_set = solve_seed_opt->count() > 0;
      solve_eta_set = solve_eta_opt->count() > 0;
      solve_common.apply(cfg);
      if (solve_eta_set) cfg.descent.eta_override = solve_eta;
      cfg.sync_subconfigs();
      cfg.validate();
      rpr::Signal signal = cfg.signal.realize(cfg.n, cfg.seed);

      rpr::Vector x0;
      if (solve_init == "auto") {
        rpr::InitResult res =
            rpr::spectral_init(draw_init_batch(cfg, signal), cfg.init);
        if (res.degenerate)
          throw std::runtime_error("spectral initialisation degenerate (x0 = 0)");
        x0 = res.x0;
      } else {
        nlohmann::json j = load_json(solve_init);
        auto vals = j["x0"].get<std::vector<double>>();
        x0 = Eigen::Map<rpr::Vector>(vals.data(), vals.size());
      }

      // Reuse the run() pipeline for one trial starting at the given x0.
      rpr::ExperimentConfig one = cfg;
      one.trials = 1;
      one.output_dir.clear();
      struct Source : rpr::BatchSource {
        const rpr::ExperimentConfig* cfg;
        const rpr::Signal* signal;
        std::uint64_t t = 0;
        rpr::Batch next() override {
          const int m_raw = cfg->variant == rpr::ModelVariant::paired
                                ? 2 * cfg->descent.m_tilde
                                : cfg->descent.m_tilde;
          rpr::Batch b = rpr::draw_clean(m_raw, *signal, cfg->noise,
                                         rpr::derive_stream(cfg->seed, {0, 4, t}),
                                         cfg->seed);
          rpr::Batch out = rpr::corrupt(
              b, cfg->adversary, rpr::derive_stream(cfg->seed, {0, 5, t}));
          ++t;
          return out;
        }
      } source;
      source.cfg = &one;
      source.signal = &signal;
      rpr::DescentTrace trace = rpr::solve(x0, source, one.descent, &signal.x_star);

      std::ofstream csv(solve_out);
      csv << "# config_hash=" << rpr::config_hash(cfg)
          << " version=" << rpr::kArtifactVersion << "\n";
      csv << rpr::kTraceHeader << "\n";
      csv << std::setprecision(12);
      for (std::size_t i = 0; i < trace.dist_curve.size(); ++i) {
        double gnorm = i == 0 ? 0.0 : trace.grad_norms[i - 1];
        int removed = i == 0 ? 0 : trace.filter_reports[i - 1].removed_count;
        double ms = i == 0 ? 0.0 : trace.elapsed_ms[i - 1];
        csv << 0 << "," << i << "," << trace.dist_curve[i] << "," << gnorm << ","
            << removed << "," << trace.eta << "," << ms << "\n";
      }
      std::cout << "final dist = " << trace.dist_curve.back() << " (trace in "
                << solve_out << ")\n";
      return 0;
    }

    if (*cmd_vm) {
      rpr::RngStream rng(rpr::derive_stream(vm_seed, {0x7e57}));
      rpr::Vector xs(vm_n), h(vm_n);
      for (int i = 0; i < vm_n; ++i) xs[i] = rng.normal();
      xs.normalize();
      for (int i = 0; i < vm_n; ++i) h[i] = rng.normal();
      h.normalize();
      rpr::Signal signal{xs};
      rpr::Vector x = xs + vm_hscale * xs.norm() * h;

      rpr::NoiseSpec noise;
      noise.family = rpr::NoiseFamily::gaussian;
      noise.sigma = vm_sigma;
      rpr::MomentTable table =
          rpr::verify_moments(x, signal, noise, vm_draws, vm_seed);
      rpr::print_moment_table(table, std::cout);
      return table.pass(5.0) ? 0 : 1;
    }

    if (*cmd_sweep) {
      nlohmann::json j = load_json(sweep_grid_file);
      if (!j.contains("base"))
        throw std::runtime_error("grid JSON must contain a \"base\" config");
      rpr::ExperimentConfig base = rpr::config_from_json(j["base"]);
      rpr::SweepGrid grid = rpr::grid_from_json(j.value("grid", nlohmann::json::object()));
      if (sweep_out.empty()) {
        rpr::sweep(grid, base, std::cout, sweep_jobs);
      } else {
        std::ofstream of(sweep_out);
        rpr::sweep(grid, base, of, sweep_jobs);
        std::cout << "sweep written to " << sweep_out << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
