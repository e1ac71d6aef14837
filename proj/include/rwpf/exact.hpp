#pragma once

#include <vector>

#include "rwpf/bridge.hpp"
#include "rwpf/model.hpp"

namespace rwpf {

// Cost meters for the rejection samplers. Counts are exact.
struct RejectionMeters {
  long endpoint_proposals = 0;   // candidate endpoint draws
  long endpoint_accepts = 0;     // accepted by the potential-tilt coin
  long thinning_rounds = 0;      // full thinning rounds started
  long thinning_accepts = 0;     // rounds with no mark under the phi graph
  long bridge_evaluations = 0;   // interior bridge values simulated
};

// One thinning round against the rate-M strip over [u, t]: marks
// (psi_j, v_j) with psi uniform in time and v uniform on (0, M); the bridge is
// revealed only at the psi_j. Returns true iff phi(W_psi_j) < v_j for every
// mark, which happens with probability E[exp(-integral phi)] given the
// endpoints. phi exceeding the stated bound is a model error, not noise.
bool poisson_thinning_accept(const std::function<double(double)>& phi,
                             double phi_upper, const BridgeSpec& spec,
                             RngStream& rng, RejectionMeters* meters = nullptr);

// Exact draw from the time-delta transition of the model SDE, by rejection:
// endpoint z ~ Normal(x0, delta) accepted with probability
// exp(A(z) - sup A), then a thinning round on the bridge x0 -> z. Requires a
// model with global phi bounds and a finite potential supremum.
double exact_propagate(const DiffusionModel& model, double x0, double delta,
                       RngStream& rng, RejectionMeters* meters = nullptr);

// One step of the bootstrap-style filter with exact prior propagation:
// ancestor k drawn with probability proportional to betas[k], state advanced
// by exact_propagate (the ancestor is held fixed through rejection retries so
// the propagated state has exactly the model transition law), weight
// f(y | z) * weights[k] / betas[k] with f the Gaussian observation density.
// With betas == weights the ratio is 1 and this is the plain bootstrap step.
void exact_bootstrap_step(const DiffusionModel& model,
                          const std::vector<double>& states,
                          const std::vector<double>& weights,
                          const std::vector<double>& betas, double y,
                          double sigma, double delta, std::size_t n_out,
                          std::vector<double>& new_states,
                          std::vector<double>& new_weights, RngStream& rng,
                          RejectionMeters* meters = nullptr);

// One step of the fully adapted rejection filter: the pair (ancestor, new
// state) is drawn jointly from the smoothing-step target
//   proportional to w_k * p_delta(z | x_k) * Normal(y; z, sigma^2)
// by rejection. Proposal: ancestor with probability proportional to
//   w_k * exp(-A(x_k)) * Normal(y; x_k, sigma^2 + delta),
// then z ~ Normal(eta_k, tau2) with eta_k = (x_k sigma^2 + delta y) /
// (sigma^2 + delta), tau2 = sigma^2 delta / (sigma^2 + delta); accept via the
// potential-tilt coin and a thinning round; on rejection the whole pair is
// redrawn. Accepted particles carry equal weights (1/N).
void exact_adapted_step(const DiffusionModel& model,
                        const std::vector<double>& states,
                        const std::vector<double>& weights, double y,
                        double sigma, double delta, std::size_t n_out,
                        std::vector<double>& new_states,
                        std::vector<double>& new_weights, RngStream& rng,
                        RejectionMeters* meters = nullptr);

}  // namespace rwpf
