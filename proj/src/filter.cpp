#include "rwpf/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rwpf {

double ess(const std::vector<double>& values) {
  double sum = 0.0, sum_sq = 0.0;
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("ess: values must be finite and >= 0");
    }
    sum += v;
    sum_sq += v * v;
  }
  if (!(sum > 0.0)) {
    throw DegenerateFilterError("ess: all weights are zero");
  }
  return sum * sum / sum_sq;
}

std::vector<std::size_t> resample_indices(const std::vector<double>& weights,
                                          std::size_t n, ResampleScheme scheme,
                                          RngStream& rng) {
  const std::size_t m = weights.size();
  if (m == 0) throw std::invalid_argument("resample_indices: empty weights");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw DegenerateFilterError("resample_indices: invalid weight");
    }
    total += w;
  }
  if (!(total > 0.0)) {
    throw DegenerateFilterError("resample_indices: all weights zero");
  }

  std::vector<std::size_t> idx;
  idx.reserve(n);
  switch (scheme) {
    case ResampleScheme::multinomial: {
      DiscreteSampler pick(weights);
      for (std::size_t j = 0; j < n; ++j) idx.push_back(pick.sample(rng.uniform()));
      break;
    }
    case ResampleScheme::stratified: {
      // one uniform per stratum [(j, j+1)/n), single sweep over the cumsum
      std::size_t k = 0;
      double cum = weights[0] / total;
      for (std::size_t j = 0; j < n; ++j) {
        const double u = (static_cast<double>(j) + rng.uniform()) /
                         static_cast<double>(n);
        while (u >= cum && k + 1 < m) {
          ++k;
          cum += weights[k] / total;
        }
        idx.push_back(k);
      }
      break;
    }
    case ResampleScheme::residual: {
      std::vector<double> residual(m);
      std::size_t assigned = 0;
      for (std::size_t j = 0; j < m; ++j) {
        const double expected = static_cast<double>(n) * weights[j] / total;
        const auto copies = static_cast<std::size_t>(std::floor(expected));
        residual[j] = expected - static_cast<double>(copies);
        for (std::size_t c = 0; c < copies; ++c) idx.push_back(j);
        assigned += copies;
      }
      if (assigned < n) {
        const double res_total =
            std::accumulate(residual.begin(), residual.end(), 0.0);
        if (res_total > 0.0) {
          DiscreteSampler pick(residual);
          for (std::size_t j = assigned; j < n; ++j) {
            idx.push_back(pick.sample(rng.uniform()));
          }
        } else {
          // exact integer expectations: fill deterministically
          for (std::size_t j = assigned; j < n; ++j) idx.push_back(j % m);
        }
      }
      break;
    }
  }
  return idx;
}

OzakiProposal ozaki_proposal(const DiffusionModel& model, double x,
                             double delta) {
  const double b = model.drift(x);
  const double c = model.drift_derivative(x);
  if (std::fabs(c) < 1e-6) {
    return OzakiProposal{x + b * delta, delta};  // Euler fallback
  }
  const double em1 = -std::expm1(-c * delta);   // 1 - e^{-c delta}
  const double em2 = -std::expm1(-2.0 * c * delta);
  return OzakiProposal{x - (b / c) * em1, em2 / (2.0 * c)};
}

OzakiProposal combine_with_observation(const OzakiProposal& prior, double y,
                                       double sigma2) {
  const double denom = sigma2 + prior.tau2;
  return OzakiProposal{(prior.eta * sigma2 + prior.tau2 * y) / denom,
                       prior.tau2 * sigma2 / denom};
}

namespace {

double weight_h_common(double w_prev, double beta, double x_prev, double x_new,
                       const DiffusionModel& model, double delta,
                       double q_density_value, double log_extra) {
  if (!(q_density_value > 0.0)) {
    throw std::invalid_argument(
        "weight_h: proposal density must be positive at the proposed state");
  }
  if (!(beta > 0.0)) {
    throw std::invalid_argument("weight_h: selection weight must be positive");
  }
  if (w_prev == 0.0) return 0.0;
  const double log_h = std::log(w_prev) - std::log(beta) + log_extra +
                       gaussian_log_density(x_new - x_prev, delta) +
                       model.potential(x_new) - model.potential(x_prev) -
                       model.phi_shift * delta - std::log(q_density_value);
  return std::exp(log_h);
}

}  // namespace

double weight_h_noisy(double w_prev, double beta, double x_prev, double x_new,
                      const DiffusionModel& model, double delta,
                      double q_density_value, double f_value) {
  if (!(f_value >= 0.0)) {
    throw std::invalid_argument("weight_h_noisy: f_value must be >= 0");
  }
  if (f_value == 0.0) return 0.0;
  return weight_h_common(w_prev, beta, x_prev, x_new, model, delta,
                         q_density_value, std::log(f_value));
}

double weight_h_events(double w_prev, double beta, double x_prev, double x_new,
                       const DiffusionModel& model, double delta,
                       double q_density_value, bool is_pseudo) {
  double log_extra = 0.0;
  if (!is_pseudo) {
    if (!model.has_intensity()) {
      throw std::invalid_argument(
          "weight_h_events: model carries no event intensity");
    }
    const double nu = model.cox_intensity(x_new);
    if (nu <= 0.0) return 0.0;
    log_extra = std::log(nu);
  }
  return weight_h_common(w_prev, beta, x_prev, x_new, model, delta,
                         q_density_value, log_extra);
}

namespace {

struct SlotProposal {
  double mean = 0.0;
  double var = 0.0;
  double log_beta = 0.0;
};

// selection weight and proposal parameters for one source particle
SlotProposal proposal_for(const Particle& p, const Observation& obs,
                          const FilterConfig& cfg, const DiffusionModel& model,
                          double delta) {
  SlotProposal sp;
  const bool adapted_obs =
      obs.regime == Regime::noisy && !obs.is_pseudo && std::isfinite(obs.value);
  if (cfg.proposal == ProposalKind::prior) {
    if (!model.transition_mean || !model.transition_var) {
      throw std::invalid_argument(
          "prior proposal needs a closed-form model transition");
    }
    sp.mean = model.transition_mean(p.state, delta);
    sp.var = model.transition_var(p.state, delta);
    sp.log_beta = p.weight > 0.0 ? std::log(p.weight)
                                 : -std::numeric_limits<double>::infinity();
    return sp;
  }
  const OzakiProposal prior = ozaki_proposal(model, p.state, delta);
  if (adapted_obs) {
    const double sigma2 = sq(cfg.observation_sigma);
    const OzakiProposal post = combine_with_observation(prior, obs.value, sigma2);
    sp.mean = post.eta;
    sp.var = post.tau2;
    sp.log_beta =
        (p.weight > 0.0 ? std::log(p.weight)
                        : -std::numeric_limits<double>::infinity()) +
        gaussian_log_density(obs.value - prior.eta, prior.tau2 + sigma2);
  } else {
    sp.mean = prior.eta;
    sp.var = prior.tau2;
    sp.log_beta = p.weight > 0.0 ? std::log(p.weight)
                                 : -std::numeric_limits<double>::infinity();
  }
  return sp;
}

}  // namespace

ParticleSet rwpf_step(const ParticleSet& ps, const Observation& obs,
                      const FilterConfig& cfg, const DiffusionModel& model,
                      const StepRng& rng) {
  const std::size_t n = ps.particles.size();
  if (n == 0) throw std::invalid_argument("rwpf_step: empty particle set");
  const double delta = obs.time - ps.time;
  if (!(delta > 0.0)) {
    throw std::invalid_argument("rwpf_step: observation time must advance");
  }
  const bool include_nu = obs.regime == Regime::point_process;
  if (include_nu && !model.has_intensity()) {
    throw std::invalid_argument("rwpf_step: model carries no event intensity");
  }

  // selection weights beta (log space against the running max)
  std::vector<SlotProposal> props(n);
  std::vector<double> betas(n);
  double log_max = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    props[j] = proposal_for(ps.particles[j], obs, cfg, model, delta);
    log_max = std::max(log_max, props[j].log_beta);
  }
  if (!std::isfinite(log_max)) {
    throw DegenerateFilterError("rwpf_step: every selection weight is zero");
  }
  for (std::size_t j = 0; j < n; ++j) {
    betas[j] = std::exp(props[j].log_beta - log_max);
  }
  double beta_total = std::accumulate(betas.begin(), betas.end(), 0.0);
  double weight_total = 0.0;
  for (const auto& p : ps.particles) weight_total += p.weight;

  const double ess_b = ess(betas);
  const double threshold = cfg.resample_threshold < 0.0
                               ? static_cast<double>(n)
                               : cfg.resample_threshold;

  ParticleSet out;
  out.time = obs.time;
  out.ess_betas = ess_b;
  out.particles.resize(n);

  std::vector<std::size_t> ancestors(n);
  std::vector<double> deltas(n);
  if (ess_b < threshold) {
    RngStream resample_rng(derive_seed(rng.master, 2, rng.step, 0));
    ancestors = resample_indices(betas, n, cfg.scheme, resample_rng);
    std::fill(deltas.begin(), deltas.end(), 1.0);
    out.resampled = true;
  } else {
    std::iota(ancestors.begin(), ancestors.end(), 0);
    for (std::size_t j = 0; j < n; ++j) deltas[j] = betas[j] / beta_total;
    out.resampled = false;
  }

  const double sigma2 = sq(cfg.observation_sigma);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t k = ancestors[j];
    const Particle& src = ps.particles[k];
    RngStream slot_rng(rng.slot_seeds
                           ? (*rng.slot_seeds)[j]
                           : derive_seed(rng.master, 1, rng.step, j));

    const SlotProposal& sp = props[k];
    const double x_new = slot_rng.normal(sp.mean, std::sqrt(sp.var));
    const double q_density = gaussian_density(x_new - sp.mean, sp.var);

    // zero-weight sources stay dead; only the carry branch can produce them
    if (deltas[j] == 0.0 || src.weight == 0.0) {
      out.particles[j] = Particle{x_new, 0.0, k};
      continue;
    }

    // one estimator draw per particle, g = phi (+ intensity for events)
    const BridgeSpec spec{src.state, x_new, 0.0, delta};
    PathFunction g;
    if (include_nu) {
      g = [&model](double u) { return model.phi(u) + model.cox_intensity(u); };
    } else {
      g = model.phi;
    }
    Estimate r;
    switch (cfg.estimator.kind) {
      case EstimatorKind::poisson: {
        double c, lambda;
        if (cfg.estimator.c && cfg.estimator.lambda) {
          c = *cfg.estimator.c;
          lambda = *cfg.estimator.lambda;
        } else if (!include_nu && model.phi_global_bounds) {
          c = cfg.estimator.c.value_or(model.phi_global_bounds->hi);
          lambda = cfg.estimator.lambda.value_or(model.phi_global_bounds->hi);
        } else {
          throw std::invalid_argument(
              "rwpf_step: Poisson estimator needs explicit c and lambda here");
        }
        r = poisson_estimator(g, spec, c, lambda, slot_rng);
        break;
      }
      case EstimatorKind::gpe1: {
        LayeredBridge bridge =
            prepare_bridge(model, include_nu, spec, cfg.estimator, slot_rng);
        r = gpe1(g, bridge, slot_rng);
        break;
      }
      case EstimatorKind::gpe2: {
        LayeredBridge bridge =
            prepare_bridge(model, include_nu, spec, cfg.estimator, slot_rng);
        r = gpe2(g, bridge, cfg.estimator.dispersion, slot_rng,
                 chord_g_integral(model, include_nu, src.state, x_new, delta));
        break;
      }
      case EstimatorKind::discretised: {
        int m = cfg.estimator.grid_points;
        if (cfg.estimator.grid_spacing > 0.0) {
          m = std::max(
              0, static_cast<int>(std::lround(delta /
                                              cfg.estimator.grid_spacing)) - 1);
        }
        r = discretised_weight(g, spec, m, slot_rng);
        break;
      }
    }
    if (r.value < 0.0) {
      r.value = 0.0;
      ++out.clamp_count;
    }

    // h factor; w and beta passed as normalised shares of their totals
    const double w_share = src.weight / weight_total;
    const double b_share = betas[k] / beta_total;
    double h;
    if (obs.regime == Regime::point_process) {
      h = weight_h_events(w_share, b_share, src.state, x_new, model, delta,
                          q_density, obs.is_pseudo);
    } else {
      double f_value = 1.0;
      if (obs.regime == Regime::noisy && !obs.is_pseudo &&
          std::isfinite(obs.value)) {
        f_value = gaussian_density(obs.value - x_new, sigma2);
      } else if (obs.regime == Regime::constrained && !obs.is_pseudo &&
                 cfg.constraint_f) {
        f_value = cfg.constraint_f(x_new, obs.value);
      }
      h = weight_h_noisy(w_share, b_share, src.state, x_new, model, delta,
                         q_density, f_value);
    }

    out.particles[j] = Particle{x_new, deltas[j] * h * r.value, k};
  }

  std::vector<double> new_weights(n);
  for (std::size_t j = 0; j < n; ++j) new_weights[j] = out.particles[j].weight;
  out.ess_weights = ess(new_weights);  // throws when the step degenerates
  return out;
}

std::vector<Observation> insert_pseudo_observations(
    const std::vector<Observation>& obs, double delta_max, double start_time) {
  if (!(delta_max > 0.0)) {
    throw std::invalid_argument("insert_pseudo_observations: delta_max <= 0");
  }
  std::vector<Observation> sorted = obs;
  std::sort(sorted.begin(), sorted.end(),
            [](const Observation& a, const Observation& b) {
              return a.time < b.time;
            });
  std::vector<Observation> out;
  double prev = start_time;
  for (const auto& o : sorted) {
    const double gap = o.time - prev;
    if (gap > delta_max) {
      const auto n_ins =
          static_cast<long>(std::ceil(gap / delta_max - 1e-12)) - 1;
      for (long i = 1; i <= n_ins; ++i) {
        Observation pseudo;
        pseudo.time = prev + gap * static_cast<double>(i) /
                                 static_cast<double>(n_ins + 1);
        pseudo.regime = o.regime;
        pseudo.is_pseudo = true;
        out.push_back(pseudo);
      }
    }
    out.push_back(o);
    prev = o.time;
  }
  return out;
}

double filter_estimate(const ParticleSet& ps,
                       const std::function<double(double)>& fn) {
  double num = 0.0, den = 0.0;
  for (const auto& p : ps.particles) {
    num += p.weight * fn(p.state);
    den += p.weight;
  }
  if (!(den > 0.0)) {
    throw DegenerateFilterError("filter_estimate: zero total weight");
  }
  return num / den;
}

double weighted_quantile(std::vector<double> values,
                         std::vector<double> weights, double q) {
  if (values.size() != weights.size() || values.empty()) {
    throw std::invalid_argument("weighted_quantile: size mismatch");
  }
  if (!(q >= 0.0 && q <= 1.0)) {
    throw std::invalid_argument("weighted_quantile: q outside [0,1]");
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) {
      throw std::invalid_argument("weighted_quantile: negative weight");
    }
    total += w;
  }
  if (!(total > 0.0)) {
    throw DegenerateFilterError("weighted_quantile: zero total weight");
  }
  double cum = 0.0;
  for (std::size_t i : order) {
    cum += weights[i];
    if (cum >= q * total) return values[i];
  }
  return values[order.back()];
}

FilterResult run_filter(const DiffusionModel& model,
                        const std::vector<Observation>& observations,
                        const FilterConfig& cfg, double prior_mean,
                        double prior_sd, std::uint64_t seed,
                        double start_time) {
  std::vector<Observation> obs = observations;
  if (cfg.delta_max) {
    obs = insert_pseudo_observations(obs, *cfg.delta_max, start_time);
  } else {
    std::sort(obs.begin(), obs.end(),
              [](const Observation& a, const Observation& b) {
                return a.time < b.time;
              });
  }

  FilterResult result;
  ParticleSet ps;
  ps.time = start_time;
  ps.particles.resize(cfg.n_particles);
  for (std::size_t j = 0; j < cfg.n_particles; ++j) {
    RngStream init_rng(derive_seed(seed, 0, 0, j));
    ps.particles[j] = Particle{init_rng.normal(prior_mean, prior_sd), 1.0, j};
  }

  long step = 0;
  for (const auto& o : obs) {
    ++step;
    ps = rwpf_step(ps, o, cfg, model, StepRng{seed, step, nullptr});
    result.total_clamps += ps.clamp_count;

    std::vector<double> states(ps.particles.size());
    std::vector<double> abs_states(ps.particles.size());
    std::vector<double> weights(ps.particles.size());
    for (std::size_t j = 0; j < ps.particles.size(); ++j) {
      states[j] = ps.particles[j].state;
      abs_states[j] = std::fabs(ps.particles[j].state);
      weights[j] = ps.particles[j].weight;
    }
    StepRecord rec;
    rec.time = ps.time;
    rec.pseudo = o.is_pseudo;
    rec.ess_weights = ps.ess_weights;
    rec.ess_betas = ps.ess_betas;
    rec.resampled = ps.resampled;
    rec.clamp_count = ps.clamp_count;
    rec.mean = filter_estimate(ps, [](double x) { return x; });
    rec.variance = filter_estimate(
        ps, [m = rec.mean](double x) { return sq(x - m); });
    rec.q05 = weighted_quantile(states, weights, 0.05);
    rec.q95 = weighted_quantile(states, weights, 0.95);
    rec.mean_abs = filter_estimate(ps, [](double x) { return std::fabs(x); });
    rec.q05_abs = weighted_quantile(abs_states, weights, 0.05);
    rec.q95_abs = weighted_quantile(abs_states, weights, 0.95);
    result.trace.push_back(rec);
  }
  result.last = std::move(ps);
  return result;
}

}  // namespace rwpf
