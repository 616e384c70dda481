#pragma once

#include <array>
#include <string>
#include <variant>

#include "rpr/types.hpp"

namespace rpr {

// Sign-invariant recovery error min(||x - x*||, ||x + x*||).
double dist(const Vector& x, const Vector& x_star);

// Closed-form population risk under gaussian covariates.
//   zero_mean: (3||x||^4 - 2||x||^2||x*||^2 - 4(x'x*)^2 + 3||x*||^4 + sigma^2)/4
//   paired:    (||x||^4 - 2(x'x*)^2 + ||x*||^4 + sigma^2/2)/2
// sigma is the raw response-noise standard deviation in both variants (the
// paired model's noise has variance sigma^2/2 after the differencing).
double pop_risk(const Vector& x, const Signal& signal, double sigma,
                ModelVariant variant);

// zero_mean: 3||x||^2 x - ||x*||^2 x - 2(x'x*) x*
// paired:    2||x||^2 x - 2(x'x*) x*
Vector pop_grad(const Vector& x, const Signal& signal, ModelVariant variant);

// zero_mean: 6xx' + 3||x||^2 I - ||x*||^2 I - 2 x*x*'
// paired:    2||x||^2 I + 4xx' - 2 x*x*'
Matrix pop_hessian(const Vector& x, const Signal& signal, ModelVariant variant);

// Per-sample gradient point p of the squared loss.
Vector sample_grad(const Vector& x, const Sample& datum);
Vector sample_grad(const Vector& x, const PairedSample& datum);

// Closed-form moments of the measurement model, used as test oracles and by
// the verify-moments harness.
enum class MomentKind {
  e_y,                // E[y] = ||x*||^2
  var_y,              // Var(y) = 2||x*||^4 + sigma^2
  e_grad,             // E[((a'x)^2 - y)(a'x) a], the population gradient
  e_y_aat,            // E[y a a'] = ||x*||^2 I + 2 x*x*'
  e_x2_xstar4_aat,    // E[(a'x)^2 (a'x*)^4 a a']
  grad_cov,           // Cov of the zero-mean-model gradient point
  cov_ya,             // Cov(y a) = (3||x*||^4 + sigma^2) I + 12||x*||^2 x*x*'
  e_upsilon_bct,      // E[upsilon b c'] = x*x*'
  cov_upsilon_ci_b,   // Cov(upsilon (c'e_i) b), coordinate i
  grad_cov_paired     // Cov of the paired-model gradient point
};

inline constexpr std::array<MomentKind, 10> kAllMomentKinds = {
    MomentKind::e_y,           MomentKind::var_y,
    MomentKind::e_grad,        MomentKind::e_y_aat,
    MomentKind::e_x2_xstar4_aat, MomentKind::grad_cov,
    MomentKind::cov_ya,        MomentKind::e_upsilon_bct,
    MomentKind::cov_upsilon_ci_b, MomentKind::grad_cov_paired};

const char* to_string(MomentKind kind);
MomentKind moment_kind_from_string(const std::string& name);
bool moment_needs_x(MomentKind kind);
bool moment_needs_coordinate(MomentKind kind);
// Moments of the paired model (b, c, upsilon) rather than (a, y).
bool moment_is_paired(MomentKind kind);

using MomentValue = std::variant<double, Vector, Matrix>;

// Evaluates the closed form. x may be null for kinds that ignore it;
// coordinate selects i for cov_upsilon_ci_b.
MomentValue moment_oracle(MomentKind kind, const Vector* x, const Signal& signal,
                          double sigma, int coordinate = 0);

// Upper bounds on trace/opnorm of the gradient-point covariance, valid for
// ||x - x*|| <= ||x*||/9 (zero_mean) resp. ||x*||/6 (paired).
struct GradCovBounds {
  double trace_bound = 0.0;
  double opnorm_bound = 0.0;
  bool in_ball = false;
};
GradCovBounds grad_cov_bounds(const Vector& x, const Signal& signal, double sigma,
                              ModelVariant variant);

}  // namespace rpr
