#include "rwpf/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rwpf {

namespace {

// uniform marks on (u, t), sorted so path-cache fills are deterministic
std::vector<double> uniform_marks(const BridgeSpec& spec, long n,
                                  RngStream& rng) {
  std::vector<double> marks(static_cast<std::size_t>(n));
  for (auto& s : marks) s = rng.uniform(spec.u, spec.t);
  std::sort(marks.begin(), marks.end());
  return marks;
}

void check_within_bounds(double g_value, const Interval& bounds) {
  if (g_value > bounds.hi + 1e-9 || g_value < bounds.lo - 1e-9) {
    throw std::logic_error(
        "estimator: g escaped the certified path bounds; bounds supplier is "
        "inconsistent with g");
  }
}

}  // namespace

Estimate poisson_estimator(const PathFunction& g, const BridgeSpec& spec,
                           double c, double lambda, RngStream& rng) {
  validate(spec);
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("poisson_estimator: lambda must be > 0");
  }
  const double duration = spec.duration();
  const long kappa = rng.poisson(lambda * duration);
  double value = std::exp((lambda - c) * duration);
  if (kappa > 0) {
    BridgePath path(spec);
    for (double s : uniform_marks(spec, kappa, rng)) {
      const double w = path.sample_plain(s, rng);
      value *= (c - g(w)) / lambda;
    }
  }
  return Estimate{value, kappa, value < 0.0};
}

Estimate gpe(const PathFunction& g, LayeredBridge& bridge,
             const std::function<double(long)>& pmf, RngStream& rng) {
  const BridgeSpec& spec = bridge.spec();
  const double duration = spec.duration();
  const Interval bounds = bridge.value_bounds();

  // inverse-cdf draw from the supplied count distribution
  const double u = rng.uniform();
  double cum = 0.0;
  long kappa = -1;
  double p_kappa = 0.0;
  for (long k = 0; k < 1000000; ++k) {
    const double pk = pmf(k);
    if (pk < -1e-15 || pk > 1.0 + 1e-12) {
      throw std::invalid_argument("gpe: pmf value outside [0,1]");
    }
    cum += pk;
    if (u < cum) {
      kappa = k;
      p_kappa = pk;
      break;
    }
  }
  if (kappa < 0) throw std::invalid_argument("gpe: pmf mass does not reach 1");

  double log_value = -bounds.hi * duration + kappa * std::log(duration) -
                     std::lgamma(kappa + 1.0) - std::log(p_kappa);
  double sign_zero = 1.0;
  for (double s : uniform_marks(spec, kappa, rng)) {
    const double gv = g(bridge.point(s, rng));
    check_within_bounds(gv, bounds);
    const double factor = bounds.hi - gv;
    if (factor <= 0.0) {
      sign_zero = 0.0;
      break;
    }
    log_value += std::log(factor);
  }
  return Estimate{sign_zero * std::exp(log_value), kappa, false};
}

Estimate gpe1(const PathFunction& g, LayeredBridge& bridge, RngStream& rng) {
  const BridgeSpec& spec = bridge.spec();
  const double duration = spec.duration();
  const Interval bounds = bridge.value_bounds();
  const double span = bounds.hi - bounds.lo;
  if (span < 1e-14) return Estimate{std::exp(-bounds.lo * duration), 0, false};

  const long kappa = rng.poisson(span * duration);
  double value = std::exp(-bounds.lo * duration);
  if (kappa > 0) {
    for (double s : uniform_marks(spec, kappa, rng)) {
      const double gv = g(bridge.point(s, rng));
      check_within_bounds(gv, bounds);
      value *= std::clamp((bounds.hi - gv) / span, 0.0, 1.0);
    }
  }
  return Estimate{value, kappa, false};
}

Estimate gpe2(const PathFunction& g, LayeredBridge& bridge, double dispersion,
              RngStream& rng, std::optional<double> chord_integral) {
  const BridgeSpec& spec = bridge.spec();
  const double duration = spec.duration();
  const Interval bounds = bridge.value_bounds();
  if (!(dispersion > 0.0)) {
    throw std::invalid_argument("gpe2: dispersion must be > 0");
  }

  double chord = 0.0;
  if (chord_integral) {
    chord = *chord_integral;
  } else {
    chord = adaptive_simpson(
        [&](double s) {
          return g(spec.x + (spec.z - spec.x) * (s - spec.u) / duration);
        },
        spec.u, spec.t, 1e-8);
  }
  double gamma = duration * bounds.hi - chord;
  if (!(gamma > 0.0)) gamma = 1e-8;  // constant-g degeneracy

  const long kappa = rng.neg_binomial(gamma, dispersion);
  double log_value = -bounds.hi * duration + kappa * std::log(duration) +
                     std::lgamma(dispersion) +
                     (dispersion + kappa) * std::log(dispersion + gamma) -
                     std::lgamma(dispersion + kappa) -
                     dispersion * std::log(dispersion) -
                     kappa * std::log(gamma);
  double sign_zero = 1.0;
  if (kappa > 0) {
    for (double s : uniform_marks(spec, kappa, rng)) {
      const double gv = g(bridge.point(s, rng));
      check_within_bounds(gv, bounds);
      const double factor = bounds.hi - gv;
      if (factor <= 0.0) {
        sign_zero = 0.0;
        break;
      }
      log_value += std::log(factor);
    }
  }
  return Estimate{sign_zero * std::exp(log_value), kappa, false};
}

Estimate discretised_weight(const PathFunction& g, const BridgeSpec& spec,
                            int interior_points, RngStream& rng) {
  validate(spec);
  if (interior_points < 0) {
    throw std::invalid_argument("discretised_weight: negative grid size");
  }
  const double duration = spec.duration();
  const double h = duration / (interior_points + 1);
  double sum = 0.5 * (g(spec.x) + g(spec.z));
  double prev_s = spec.u;
  double prev_w = spec.x;
  for (int k = 1; k <= interior_points; ++k) {
    const double s = spec.u + k * h;
    const double mean = bridge_conditional_mean(prev_s, prev_w, spec.t, spec.z, s);
    const double var = bridge_conditional_var(prev_s, spec.t, s);
    const double w = rng.normal(mean, std::sqrt(var));
    sum += g(w);
    prev_s = s;
    prev_w = w;
  }
  return Estimate{std::exp(-sum * h), interior_points, false};
}

std::vector<double> optimal_kappa_pmf(const std::vector<double>& moments) {
  if (moments.empty()) {
    throw std::invalid_argument("optimal_kappa_pmf: empty moment sequence");
  }
  std::vector<double> p(moments.size());
  double total = 0.0;
  for (std::size_t k = 0; k < moments.size(); ++k) {
    if (!(moments[k] > 0.0)) {
      throw std::invalid_argument("optimal_kappa_pmf: moments must be positive");
    }
    p[k] = std::sqrt(moments[k]);
    total += p[k];
  }
  for (auto& v : p) v /= total;
  return p;
}

EstimatorDiagnostics estimator_diagnostics(const std::vector<Estimate>& draws,
                                           std::optional<double> reference_mean) {
  if (draws.size() < 2) {
    throw std::invalid_argument("estimator_diagnostics: need at least 2 draws");
  }
  EstimatorDiagnostics d;
  d.n = draws.size();
  double sum = 0.0, sum_kappa = 0.0;
  for (const auto& e : draws) {
    sum += e.value;
    sum_kappa += static_cast<double>(e.kappa);
  }
  d.sample_mean = sum / d.n;
  d.mean_kappa = sum_kappa / d.n;
  double ss = 0.0;
  for (const auto& e : draws) ss += sq(e.value - d.sample_mean);
  d.sample_variance = ss / (d.n - 1);
  if (reference_mean) {
    double mse = 0.0;
    for (const auto& e : draws) mse += sq(e.value - *reference_mean);
    d.coefficient_of_variation = std::sqrt(mse / d.n) / *reference_mean;
  } else {
    d.coefficient_of_variation =
        std::sqrt(d.sample_variance) / std::fabs(d.sample_mean);
  }
  return d;
}

double lambda_w_fine_grid(const PathFunction& g, const BridgeSpec& spec,
                          double upper_bound, int n_steps, RngStream& rng) {
  validate(spec);
  if (n_steps < 1) throw std::invalid_argument("lambda_w_fine_grid: n_steps");
  const double duration = spec.duration();
  const double h = duration / n_steps;
  double prev_s = spec.u;
  double prev_w = spec.x;
  double sum = 0.5 * sq(upper_bound - g(spec.x));
  for (int k = 1; k < n_steps; ++k) {
    const double s = spec.u + k * h;
    const double mean = bridge_conditional_mean(prev_s, prev_w, spec.t, spec.z, s);
    const double var = bridge_conditional_var(prev_s, spec.t, s);
    prev_w = rng.normal(mean, std::sqrt(var));
    prev_s = s;
    sum += sq(upper_bound - g(prev_w));
  }
  sum += 0.5 * sq(upper_bound - g(spec.z));
  return std::sqrt(duration * sum * h);
}

void attach_value_bounds(LayeredBridge& bridge, const DiffusionModel& model,
                         bool include_nu) {
  if (!bridge.layered()) {
    throw std::invalid_argument(
        "attach_value_bounds: bridge carries no layer rectangle");
  }
  const Interval rect = bridge.rectangle();
  bridge.set_value_bounds(
      g_range_over_interval(model, include_nu, rect.lo, rect.hi));
}

LayeredBridge prepare_bridge(const DiffusionModel& model, bool include_nu,
                             const BridgeSpec& spec, const EstimatorConfig& cfg,
                             RngStream& rng) {
  if (cfg.use_global_bounds) {
    if (include_nu) {
      throw std::invalid_argument(
          "prepare_bridge: global bounds cover phi only, not the event "
          "intensity");
    }
    if (!model.phi_global_bounds) {
      throw std::invalid_argument(
          "prepare_bridge: model has no global phi bounds");
    }
    return LayeredBridge::with_global_bounds(spec, *model.phi_global_bounds);
  }
  const double a = cfg.layer_width_factor * std::sqrt(spec.duration());
  LayeredBridge bridge = LayeredBridge::sample_layer(spec, a, rng);
  attach_value_bounds(bridge, model, include_nu);
  return bridge;
}

Estimate transition_density_estimate(const DiffusionModel& model, double x0,
                                     double xt, double t,
                                     const EstimatorConfig& cfg,
                                     RngStream& rng) {
  if (!(t > 0.0)) {
    throw std::invalid_argument("transition_density_estimate: t must be > 0");
  }
  const BridgeSpec spec{x0, xt, 0.0, t};
  PathFunction g = model.phi;

  Estimate r;
  switch (cfg.kind) {
    case EstimatorKind::poisson: {
      double c, lambda;
      if (cfg.c && cfg.lambda) {
        c = *cfg.c;
        lambda = *cfg.lambda;
      } else if (model.phi_global_bounds) {
        c = cfg.c.value_or(model.phi_global_bounds->hi);
        lambda = cfg.lambda.value_or(model.phi_global_bounds->hi);
      } else {
        throw std::invalid_argument(
            "poisson estimator needs c and lambda when phi is unbounded");
      }
      r = poisson_estimator(g, spec, c, lambda, rng);
      break;
    }
    case EstimatorKind::gpe1: {
      LayeredBridge bridge = prepare_bridge(model, false, spec, cfg, rng);
      r = gpe1(g, bridge, rng);
      break;
    }
    case EstimatorKind::gpe2: {
      LayeredBridge bridge = prepare_bridge(model, false, spec, cfg, rng);
      r = gpe2(g, bridge, cfg.dispersion, rng,
               chord_g_integral(model, false, x0, xt, t));
      break;
    }
    case EstimatorKind::discretised: {
      int m = cfg.grid_points;
      if (cfg.grid_spacing > 0.0) {
        m = std::max(0, static_cast<int>(std::lround(t / cfg.grid_spacing)) - 1);
      }
      r = discretised_weight(g, spec, m, rng);
      break;
    }
  }
  const double envelope = gaussian_density(xt - x0, t) *
                          std::exp(model.potential(xt) - model.potential(x0) -
                                   model.phi_shift * t);
  r.value *= envelope;
  return r;
}

double euler_bridge_density_estimate(const DiffusionModel& model, double x0,
                                     double xt, double t,
                                     int intermediate_points, RngStream& rng) {
  if (!(t > 0.0)) {
    throw std::invalid_argument(
        "euler_bridge_density_estimate: t must be > 0");
  }
  if (intermediate_points < 0) {
    throw std::invalid_argument(
        "euler_bridge_density_estimate: intermediate_points must be >= 0");
  }
  const int m = intermediate_points;
  const double dt = t / (m + 1);
  double x = x0;
  double log_w = 0.0;
  for (int k = 0; k < m; ++k) {
    const double remaining = t - k * dt;
    // Conditioned-Gaussian proposal for the next skeleton state given the
    // fixed endpoint xt.
    const double mean = x + (xt - x) * dt / remaining;
    const double var = dt * (remaining - dt) / remaining;
    const double next = mean + std::sqrt(var) * rng.normal();
    log_w += gaussian_log_density(next - x - model.drift(x) * dt, dt) -
             gaussian_log_density(next - mean, var);
    x = next;
  }
  log_w += gaussian_log_density(xt - x - model.drift(x) * dt, dt);
  return std::exp(log_w);
}

}  // namespace rwpf
