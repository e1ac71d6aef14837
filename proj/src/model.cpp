#include "rwpf/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace rwpf {

double eval_phi(const DiffusionModel& model, double u) { return model.phi(u); }

namespace {

Interval range_from_candidates(const std::function<double(double)>& g,
                               const std::vector<double>& candidates) {
  Interval r{g(candidates.front()), g(candidates.front())};
  for (double c : candidates) {
    const double v = g(c);
    r.lo = std::min(r.lo, v);
    r.hi = std::max(r.hi, v);
  }
  return r;
}

// scan + golden-section fallback for models without a closed-form range
Interval scanned_range(const std::function<double(double)>& g, double lo,
                       double hi) {
  const int n = 257;
  const double h = (hi - lo) / (n - 1);
  double best_min = g(lo), best_max = g(lo);
  int imin = 0, imax = 0;
  for (int i = 1; i < n; ++i) {
    const double v = g(lo + i * h);
    if (v < best_min) { best_min = v; imin = i; }
    if (v > best_max) { best_max = v; imax = i; }
  }
  auto refine = [&](int i, int sign) {
    const double a = lo + std::max(0, i - 1) * h;
    const double b = lo + std::min(n - 1, i + 1) * h;
    auto f = [&](double u) { return sign * g(u); };
    const double u = golden_section_min(f, a, b, 1e-11 * (1.0 + hi - lo));
    return g(u);
  };
  best_min = std::min(best_min, refine(imin, +1));
  best_max = std::max(best_max, refine(imax, -1));
  const double margin = 1e-9 * (1.0 + std::fabs(best_max) + std::fabs(best_min));
  return Interval{best_min - margin, best_max + margin};
}

// critical points of (sin^2 u + cos u + 1)/2: u = k*pi and u = +-pi/3 + 2k*pi
void push_multiples(std::vector<double>& out, double base, double period,
                    double lo, double hi) {
  const double k0 = std::ceil((lo - base) / period);
  for (double k = k0; base + k * period <= hi; k += 1.0) {
    out.push_back(base + k * period);
  }
}

}  // namespace

Interval g_range_over_interval(const DiffusionModel& model, bool include_nu,
                               double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("g_range_over_interval: lo > hi");
  if (include_nu && !model.has_intensity()) {
    throw std::invalid_argument(
        "g_range_over_interval: model has no event intensity");
  }
  if (model.g_range) return model.g_range(include_nu, lo, hi);
  std::function<double(double)> g;
  if (include_nu) {
    g = [&model](double u) { return model.phi(u) + model.cox_intensity(u); };
  } else {
    g = [&model](double u) { return model.phi(u); };
  }
  return scanned_range(g, lo, hi);
}

double chord_g_integral(const DiffusionModel& model, bool include_nu, double x,
                        double z, double t) {
  if (include_nu && !model.has_intensity()) {
    throw std::invalid_argument("chord_g_integral: model has no event intensity");
  }
  if (model.chord_g_integral) return model.chord_g_integral(include_nu, x, z, t);
  auto chord = [&](double s) {
    const double u = x + (z - x) * (s / t);
    return model.phi(u) + (include_nu ? model.cox_intensity(u) : 0.0);
  };
  return adaptive_simpson(chord, 0.0, t, 1e-8);
}

DiffusionModel make_sine_model() {
  DiffusionModel m;
  m.name = "sine";
  m.drift = [](double u) { return std::sin(u); };
  m.drift_derivative = [](double u) { return std::cos(u); };
  m.potential = [](double u) { return -std::cos(u); };
  m.phi = [](double u) {
    const double s = std::sin(u);
    return 0.5 * (s * s + std::cos(u) + 1.0);
  };
  m.phi_shift = -0.5;
  m.phi_global_bounds = Interval{0.0, 9.0 / 8.0};
  m.potential_max = 1.0;
  m.linear_lower_bound_delta = 0.0;
  m.g_range = [phi = m.phi](bool include_nu, double lo, double hi) {
    if (include_nu) {
      throw std::invalid_argument("sine model has no event intensity");
    }
    if (hi - lo >= 2.0 * M_PI) return Interval{0.0, 9.0 / 8.0};
    std::vector<double> cand{lo, hi};
    push_multiples(cand, 0.0, M_PI, lo, hi);           // u = k*pi
    push_multiples(cand, M_PI / 3.0, 2.0 * M_PI, lo, hi);
    push_multiples(cand, -M_PI / 3.0, 2.0 * M_PI, lo, hi);
    return range_from_candidates(phi, cand);
  };
  // antiderivative of phi: 3u/4 - sin(2u)/8 + sin(u)/2
  m.chord_g_integral = [phi = m.phi](bool include_nu, double x, double z,
                                     double t) {
    if (include_nu) {
      throw std::invalid_argument("sine model has no event intensity");
    }
    if (std::fabs(z - x) < 1e-9) return t * phi(0.5 * (x + z));
    auto anti = [](double u) {
      return 0.75 * u - std::sin(2.0 * u) / 8.0 + 0.5 * std::sin(u);
    };
    return t * (anti(z) - anti(x)) / (z - x);
  };
  return m;
}

DiffusionModel make_ou_model(double rho, double intensity_offset,
                             double intensity_slope) {
  if (!(rho > 0.0)) throw std::invalid_argument("ou model: rho must be > 0");
  if (intensity_offset < 0.0 || intensity_slope < 0.0) {
    throw std::invalid_argument("ou model: intensity parameters must be >= 0");
  }
  DiffusionModel m;
  m.name = (intensity_offset > 0.0 || intensity_slope > 0.0) ? "ou_cox" : "ou";
  m.drift = [rho](double u) { return -rho * u; };
  m.drift_derivative = [rho](double) { return -rho; };
  m.potential = [rho](double u) { return -0.5 * rho * u * u; };
  m.phi = [rho](double u) { return 0.5 * rho * rho * u * u; };
  m.phi_shift = -0.5 * rho;
  m.potential_max = 0.0;
  m.linear_lower_bound_delta = 0.0;
  if (intensity_offset > 0.0 || intensity_slope > 0.0) {
    m.cox_intensity = [intensity_offset, intensity_slope](double u) {
      return intensity_offset + intensity_slope * std::fabs(u);
    };
  }
  m.g_range = [rho, intensity_offset, intensity_slope, has_nu = m.has_intensity()](
                  bool include_nu, double lo, double hi) {
    if (include_nu && !has_nu) {
      throw std::invalid_argument("ou model has no event intensity");
    }
    auto g = [&](double u) {
      double v = 0.5 * rho * rho * u * u;
      if (include_nu) v += intensity_offset + intensity_slope * std::fabs(u);
      return v;
    };
    // monotone in |u|: extremes sit at the endpoints or at zero
    std::vector<double> cand{lo, hi};
    if (lo < 0.0 && hi > 0.0) cand.push_back(0.0);
    return range_from_candidates(g, cand);
  };
  m.transition_mean = [rho](double x0, double delta) {
    return std::exp(-rho * delta) * x0;
  };
  m.transition_var = [rho](double, double delta) {
    return -std::expm1(-2.0 * rho * delta) / (2.0 * rho);
  };
  m.chord_g_integral = [rho, intensity_offset, intensity_slope](
                           bool include_nu, double x, double z, double t) {
    // integral of rho^2 u^2 / 2 along the chord
    double v = 0.5 * rho * rho * t * (x * x + x * z + z * z) / 3.0;
    if (include_nu) {
      v += intensity_offset * t;
      double abs_part;
      if (x * z >= 0.0) {
        abs_part = 0.5 * t * (std::fabs(x) + std::fabs(z));
      } else {
        abs_part = 0.5 * t * (x * x + z * z) / (std::fabs(x) + std::fabs(z));
      }
      v += intensity_slope * abs_part;
    }
    return v;
  };
  return m;
}

double lamperti_transform_1d(const std::function<double(double)>& sigma_fn,
                             double u_star, double z) {
  auto integrand = [&](double u) {
    const double s = sigma_fn(u);
    if (!(s > 0.0)) {
      throw std::domain_error("lamperti_transform_1d: volatility must be > 0");
    }
    return 1.0 / s;
  };
  if (u_star == z) {
    (void)integrand(u_star);  // still validate at the point itself
    return 0.0;
  }
  return adaptive_simpson(integrand, u_star, z, 1e-10);
}

}  // namespace rwpf
