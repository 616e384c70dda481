#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rpr/descent.hpp"
#include "rpr/estimators.hpp"
#include "rpr/harness.hpp"
#include "rpr/init.hpp"
#include "rpr/model.hpp"
#include "rpr/risk.hpp"
#include "rpr/version.hpp"

namespace py = pybind11;
using namespace rpr;

namespace {

ModelVariant variant_from(const std::string& s) {
  if (s == "zero_mean") return ModelVariant::zero_mean;
  if (s == "paired") return ModelVariant::paired;
  throw std::invalid_argument("variant must be zero_mean or paired");
}

EstimatorParams params_from(double epsilon, double delta, int m) {
  EstimatorParams p;
  p.epsilon = epsilon;
  p.delta = delta;
  p.m = m;
  return p;
}

py::dict report_dict(const FilterReport& r) {
  py::dict d;
  d["removed_count"] = r.removed_count;
  d["iterations"] = r.iterations;
  d["final_top_eigenvalue"] = r.final_top_eigenvalue;
  d["final_weight_mass"] = r.final_weight_mass;
  d["budget_exhausted"] = r.budget_exhausted;
  return d;
}

}  // namespace

PYBIND11_MODULE(_rpr, m) {
  m.doc() = "Robust phase retrieval: spectral initialisation and robust "
            "gradient descent under contamination and heavy-tailed noise.";
  m.attr("__version__") = kArtifactVersion;

  m.def("dist", &dist, py::arg("x"), py::arg("x_star"),
        "Sign-invariant error min(||x - x*||, ||x + x*||).");

  m.def(
      "pop_risk",
      [](const Vector& x, const Vector& x_star, double sigma,
         const std::string& variant) {
        return pop_risk(x, Signal{x_star}, sigma, variant_from(variant));
      },
      py::arg("x"), py::arg("x_star"), py::arg("sigma") = 0.0,
      py::arg("variant") = "zero_mean");

  m.def(
      "pop_grad",
      [](const Vector& x, const Vector& x_star, const std::string& variant) {
        return pop_grad(x, Signal{x_star}, variant_from(variant));
      },
      py::arg("x"), py::arg("x_star"), py::arg("variant") = "zero_mean");

  m.def(
      "pop_hessian",
      [](const Vector& x, const Vector& x_star, const std::string& variant) {
        return pop_hessian(x, Signal{x_star}, variant_from(variant));
      },
      py::arg("x"), py::arg("x_star"), py::arg("variant") = "zero_mean");

  m.def(
      "sample_grad",
      [](const Vector& x, const Vector& a, double y) {
        Sample s;
        s.a = a;
        s.y = y;
        return sample_grad(x, s);
      },
      py::arg("x"), py::arg("a"), py::arg("y"));

  m.def(
      "sample_grad_paired",
      [](const Vector& x, const Vector& b, const Vector& c, double upsilon) {
        PairedSample s;
        s.b = b;
        s.c = c;
        s.upsilon = upsilon;
        return sample_grad(x, s);
      },
      py::arg("x"), py::arg("b"), py::arg("c"), py::arg("upsilon"));

  m.def(
      "moment_oracle",
      [](const std::string& kind_name, py::object x, const Vector& x_star,
         double sigma, int coordinate) -> py::object {
        MomentKind kind = moment_kind_from_string(kind_name);
        Vector xv;
        const Vector* px = nullptr;
        if (!x.is_none()) {
          xv = x.cast<Vector>();
          px = &xv;
        }
        MomentValue v = moment_oracle(kind, px, Signal{x_star}, sigma, coordinate);
        if (std::holds_alternative<double>(v)) return py::cast(std::get<double>(v));
        if (std::holds_alternative<Vector>(v)) return py::cast(std::get<Vector>(v));
        return py::cast(std::get<Matrix>(v));
      },
      py::arg("kind"), py::arg("x") = py::none(), py::arg("x_star"),
      py::arg("sigma") = 0.0, py::arg("coordinate") = 0);

  m.def("moment_kinds", [] {
    std::vector<std::string> names;
    for (MomentKind k : kAllMomentKinds) names.push_back(to_string(k));
    return names;
  });

  m.def(
      "robust_scalar_mean",
      [](const std::vector<double>& values, double epsilon, double delta) {
        return robust_scalar_mean(
            values, params_from(epsilon, delta, static_cast<int>(values.size())));
      },
      py::arg("values"), py::arg("epsilon") = 0.0, py::arg("delta") = 0.05);

  m.def(
      "stable_mean",
      [](const Matrix& points, double epsilon, double delta) {
        auto [mu, rep] =
            stable_mean(points, params_from(epsilon, delta,
                                            static_cast<int>(points.rows())));
        return py::make_tuple(mu, report_dict(rep));
      },
      py::arg("points"), py::arg("epsilon") = 0.0, py::arg("delta") = 0.05,
      "Filtering stable mean over the rows of `points`; returns (mean, report).");

  m.def(
      "robust_covariance",
      [](const Matrix& points, double epsilon, double delta) {
        return robust_covariance(
            points,
            params_from(epsilon, delta, static_cast<int>(points.rows())));
      },
      py::arg("points"), py::arg("epsilon") = 0.0, py::arg("delta") = 0.05);

  m.def(
      "top_eigenpair",
      [](const Matrix& mat) {
        EigPair e = top_eigenpair(mat);
        return py::make_tuple(e.value, e.vector, e.converged);
      },
      py::arg("m"), "Largest eigenpair of (M + M')/2 by shifted power iteration.");

  m.def(
      "step_size",
      [](double x0_norm, const std::string& variant) {
        return step_size(x0_norm, variant_from(variant));
      },
      py::arg("x0_norm"), py::arg("variant") = "zero_mean");

  m.def(
      "draw_clean",
      [](int m, const Vector& x_star, double sigma, double mean,
         std::uint64_t seed) {
        NoiseSpec noise;
        noise.sigma = sigma;
        noise.mean = mean;
        Batch b = draw_clean(m, Signal{x_star}, noise, seed, seed);
        Matrix a(m, x_star.size());
        Vector y(m);
        for (int j = 0; j < m; ++j) {
          a.row(j) = b.samples[j].a.transpose();
          y[j] = b.samples[j].y;
        }
        return py::make_tuple(a, y);
      },
      py::arg("m"), py::arg("x_star"), py::arg("sigma") = 0.0,
      py::arg("mean") = 0.0, py::arg("seed") = 0,
      "Gaussian-noise phase retrieval sample; returns (A, y).");

  m.def(
      "run_experiment",
      [](const std::string& config_json, int jobs) {
        ExperimentConfig cfg = config_from_json(nlohmann::json::parse(config_json));
        return run(cfg, jobs).to_json().dump();
      },
      py::arg("config_json"), py::arg("jobs") = 1,
      "Full init + descent pipeline from a JSON config string; returns the "
      "summary JSON string.");

  m.def(
      "verify_moments",
      [](int n, double sigma, long draws, std::uint64_t seed) {
        RngStream rng(derive_stream(seed, {0x7e57}));
        Vector xs(n), h(n);
        for (int i = 0; i < n; ++i) xs[i] = rng.normal();
        xs.normalize();
        for (int i = 0; i < n; ++i) h[i] = rng.normal();
        h.normalize();
        NoiseSpec noise;
        noise.sigma = sigma;
        MomentTable t =
            verify_moments(xs + 0.1 * h, Signal{xs}, noise, draws, seed);
        py::list rows;
        for (const auto& row : t.rows) {
          py::dict d;
          d["kind"] = to_string(row.kind);
          d["coordinate"] = row.coordinate;
          d["max_abs_z"] = row.max_abs_z;
          rows.append(d);
        }
        py::dict out;
        out["rows"] = rows;
        out["max_abs_z"] = t.max_abs_z;
        out["pass"] = t.pass(5.0);
        return out;
      },
      py::arg("n") = 3, py::arg("sigma") = 1.0, py::arg("draws") = 100000,
      py::arg("seed") = 1);
}
