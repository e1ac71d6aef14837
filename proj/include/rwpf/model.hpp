#pragma once

#include <functional>
#include <optional>
#include <string>

#include "rwpf/numerics.hpp"

namespace rwpf {

// Scalar diffusion dX = drift(X) dt + dB with gradient-form drift: drift = A'
// for a potential A. phi(u) = (drift(u)^2 + drift'(u))/2 - phi_shift must be
// nonnegative everywhere; phi_shift is the constant that centres it.
struct DiffusionModel {
  std::string name;
  int dimension = 1;

  std::function<double(double)> drift;
  std::function<double(double)> drift_derivative;
  std::function<double(double)> potential;  // A, with A' = drift
  std::function<double(double)> phi;
  double phi_shift = 0.0;

  // global (inf, sup) of phi when known; enables the no-layer fast path
  std::optional<Interval> phi_global_bounds;

  // event intensity nu for the point-process observation regime; absent otherwise
  std::function<double(double)> cox_intensity;

  // tight range of g over [lo,hi], where g = phi (+ nu when include_nu)
  std::function<Interval(bool include_nu, double lo, double hi)> g_range;

  // present when g admits a linear lower bound g(u) >= -delta*(1+|u|): the
  // finite-variance capability flag for the bounded-by-construction estimator
  std::optional<double> linear_lower_bound_delta;

  // sup of the potential A, needed by rejection-based exact propagation
  std::optional<double> potential_max;

  // closed-form mean/variance of the exact transition over a step, when known
  // (drives the "prior" proposal); signature: (x0, delta) -> value
  std::function<double(double, double)> transition_mean;
  std::function<double(double, double)> transition_var;

  // optional closed form for the integral of g along the straight chord from
  // (0, x) to (t, z); quadrature is used when absent
  std::function<double(bool include_nu, double x, double z, double t)>
      chord_g_integral;

  bool has_intensity() const { return static_cast<bool>(cox_intensity); }
};

double eval_phi(const DiffusionModel& model, double u);

// Tight (min, max) of g over [lo, hi]. Shipped models use critical-point
// analysis; models without a g_range member fall back to a guarded scan plus
// golden-section refinement.
Interval g_range_over_interval(const DiffusionModel& model, bool include_nu,
                               double lo, double hi);

// g along the chord interpolant, integrated over the step; closed form when the
// model provides one, adaptive Simpson (rel tol 1e-8) otherwise.
double chord_g_integral(const DiffusionModel& model, bool include_nu, double x,
                        double z, double t);

// dX = sin(X) dt + dB: A = -cos, phi = (sin^2 u + cos u + 1)/2 in [0, 9/8]
DiffusionModel make_sine_model();

// Ornstein-Uhlenbeck dX = -rho X dt + dB with optional event intensity
// nu(x) = intensity_offset + intensity_slope*|x|; phi = rho^2 x^2 / 2.
DiffusionModel make_ou_model(double rho, double intensity_offset = 0.0,
                             double intensity_slope = 0.0);

// Unit-diffusion transformation for a scalar SDE with state-dependent
// volatility sigma_fn: returns eta(z) = integral_{u_star}^{z} du / sigma_fn(u),
// adaptive quadrature with relative tolerance 1e-10. Throws std::domain_error
// if sigma_fn is not strictly positive on the integration range.
double lamperti_transform_1d(const std::function<double(double)>& sigma_fn,
                             double u_star, double z);

}  // namespace rwpf
