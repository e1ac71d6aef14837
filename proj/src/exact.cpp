#include "rwpf/exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rwpf {

namespace {

void require_exact_capable(const DiffusionModel& model) {
  if (!model.phi_global_bounds || !model.potential_max) {
    throw std::invalid_argument(
        "exact propagation needs global phi bounds and a finite potential "
        "supremum; this model provides neither layer-free bounds nor sup A");
  }
}

}  // namespace

bool poisson_thinning_accept(const std::function<double(double)>& phi,
                             double phi_upper, const BridgeSpec& spec,
                             RngStream& rng, RejectionMeters* meters) {
  validate(spec);
  if (!(phi_upper >= 0.0)) {
    throw std::invalid_argument("poisson_thinning_accept: bound must be >= 0");
  }
  if (meters) ++meters->thinning_rounds;
  const long kappa = rng.poisson(phi_upper * spec.duration());
  bool accepted = true;
  if (kappa > 0) {
    std::vector<double> times(static_cast<std::size_t>(kappa));
    for (auto& s : times) s = rng.uniform(spec.u, spec.t);
    std::sort(times.begin(), times.end());
    BridgePath path(spec);
    for (double s : times) {
      const double w = path.sample_plain(s, rng);
      if (meters) ++meters->bridge_evaluations;
      const double p = phi(w);
      if (p < 0.0 || p > phi_upper + 1e-9) {
        throw std::logic_error(
            "poisson_thinning_accept: phi left [0, bound]; the stated bound "
            "is wrong for this model");
      }
      const double v = rng.uniform(0.0, phi_upper);
      if (p >= v) {
        accepted = false;
        break;  // one mark under the graph sinks the round
      }
    }
  }
  if (accepted && meters) ++meters->thinning_accepts;
  return accepted;
}

double exact_propagate(const DiffusionModel& model, double x0, double delta,
                       RngStream& rng, RejectionMeters* meters) {
  require_exact_capable(model);
  if (!(delta > 0.0)) {
    throw std::invalid_argument("exact_propagate: delta must be > 0");
  }
  const double a_max = *model.potential_max;
  const double phi_upper = model.phi_global_bounds->hi;
  const double sd = std::sqrt(delta);
  for (;;) {
    const double z = rng.normal(x0, sd);
    if (meters) ++meters->endpoint_proposals;
    if (rng.uniform() >= std::exp(model.potential(z) - a_max)) continue;
    if (meters) ++meters->endpoint_accepts;
    const BridgeSpec spec{x0, z, 0.0, delta};
    if (poisson_thinning_accept(model.phi, phi_upper, spec, rng, meters)) {
      return z;
    }
  }
}

void exact_bootstrap_step(const DiffusionModel& model,
                          const std::vector<double>& states,
                          const std::vector<double>& weights,
                          const std::vector<double>& betas, double y,
                          double sigma, double delta, std::size_t n_out,
                          std::vector<double>& new_states,
                          std::vector<double>& new_weights, RngStream& rng,
                          RejectionMeters* meters) {
  require_exact_capable(model);
  if (states.size() != weights.size() || states.size() != betas.size()) {
    throw std::invalid_argument("exact_bootstrap_step: size mismatch");
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("exact_bootstrap_step: sigma must be > 0");
  }
  const DiscreteSampler pick(betas);
  const double beta_total = pick.total();
  double weight_total = 0.0;
  for (double w : weights) weight_total += w;
  if (!(weight_total > 0.0)) {
    throw std::invalid_argument("exact_bootstrap_step: all weights zero");
  }

  new_states.assign(n_out, 0.0);
  new_weights.assign(n_out, 0.0);
  const double var = sigma * sigma;
  for (std::size_t i = 0; i < n_out; ++i) {
    const std::size_t k = pick.sample(rng.uniform());
    const double z = exact_propagate(model, states[k], delta, rng, meters);
    const double ratio =
        (weights[k] / weight_total) / (betas[k] / beta_total);
    new_states[i] = z;
    new_weights[i] = gaussian_density(y - z, var) * ratio;
  }
}

void exact_adapted_step(const DiffusionModel& model,
                        const std::vector<double>& states,
                        const std::vector<double>& weights, double y,
                        double sigma, double delta, std::size_t n_out,
                        std::vector<double>& new_states,
                        std::vector<double>& new_weights, RngStream& rng,
                        RejectionMeters* meters) {
  require_exact_capable(model);
  if (states.size() != weights.size() || states.empty()) {
    throw std::invalid_argument("exact_adapted_step: empty or mismatched input");
  }
  if (!(sigma > 0.0) || !(delta > 0.0)) {
    throw std::invalid_argument("exact_adapted_step: sigma and delta must be > 0");
  }
  const double var = sigma * sigma;
  const double a_max = *model.potential_max;
  const double phi_upper = model.phi_global_bounds->hi;
  const double tau2 = var * delta / (var + delta);
  const double tau = std::sqrt(tau2);

  // ancestor weights in log space: the exp(-A(x)) tilt and the predictive
  // Gaussian can both overflow for far-out particles
  std::vector<double> logw(states.size());
  double log_max = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (!(weights[k] >= 0.0)) {
      throw std::invalid_argument("exact_adapted_step: negative weight");
    }
    if (weights[k] == 0.0) {
      logw[k] = -std::numeric_limits<double>::infinity();
      continue;
    }
    logw[k] = std::log(weights[k]) - model.potential(states[k]) -
              0.5 * sq(y - states[k]) / (var + delta);
    log_max = std::max(log_max, logw[k]);
  }
  if (!std::isfinite(log_max)) {
    throw std::invalid_argument("exact_adapted_step: all weights zero");
  }
  std::vector<double> anc(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    anc[k] = std::exp(logw[k] - log_max);
  }
  const DiscreteSampler pick(anc);

  new_states.assign(n_out, 0.0);
  new_weights.assign(n_out, 1.0);
  for (std::size_t i = 0; i < n_out; ++i) {
    for (;;) {
      const std::size_t k = pick.sample(rng.uniform());
      const double eta = (states[k] * var + delta * y) / (var + delta);
      const double z = rng.normal(eta, tau);
      if (meters) ++meters->endpoint_proposals;
      if (rng.uniform() >= std::exp(model.potential(z) - a_max)) continue;
      if (meters) ++meters->endpoint_accepts;
      const BridgeSpec spec{states[k], z, 0.0, delta};
      if (poisson_thinning_accept(model.phi, phi_upper, spec, rng, meters)) {
        new_states[i] = z;
        break;
      }
    }
  }
}

}  // namespace rwpf
