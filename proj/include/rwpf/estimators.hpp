#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "rwpf/bridge.hpp"
#include "rwpf/model.hpp"

namespace rwpf {

enum class EstimatorKind { poisson, gpe1, gpe2, discretised };

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::gpe2;
  // exponential-tilt constant c and Poisson rate lambda for the plain
  // Poisson estimator; default to the global sup of phi when the model has one
  std::optional<double> c;
  std::optional<double> lambda;
  double dispersion = 10.0;    // negative-binomial dispersion for gpe2
  int grid_points = 1;         // interior points for the discretised comparator
  double grid_spacing = 0.0;   // when > 0, overrides grid_points as delta/spacing
  bool use_global_bounds = false;  // skip layer sampling, use global phi bounds
  double layer_width_factor = 0.75;  // layer width a = factor * sqrt(duration)
};

struct Estimate {
  double value = 0.0;
  long kappa = 0;
  bool negative = false;  // a signed estimator produced a negative draw
};

using PathFunction = std::function<double(double)>;

// Single draw of the unbiased estimator of E[exp(-integral g(W_s) ds)] over the
// bridge, by exponential tilting: exp((lambda-c)T) prod_j (c - g(W_psi_j))/lambda
// with kappa ~ Poisson(lambda*T). May be negative; flagged.
Estimate poisson_estimator(const PathFunction& g, const BridgeSpec& spec,
                           double c, double lambda, RngStream& rng);

// Generalised form with caller-supplied count pmf p(k):
// exp(-U*T) T^kappa / (kappa! p(kappa)) prod_j (U - g(W_psi_j)).
// The pmf must be a proper distribution on {0,1,...}.
Estimate gpe(const PathFunction& g, LayeredBridge& bridge,
             const std::function<double(long)>& pmf, RngStream& rng);

// Bounded-by-construction variant: kappa ~ Poisson((U-L)*T), draw equals
// exp(-L*T) prod_j (U - g)/(U - L), always inside [0, exp(-L*T)].
Estimate gpe1(const PathFunction& g, LayeredBridge& bridge, RngStream& rng);

// Negative-binomial-count variant with mean tuned to the chord of the bridge:
// gamma = T*U - integral of g along the straight chord between the endpoints.
// chord_integral may be supplied (closed form); otherwise it is computed by
// adaptive Simpson quadrature on g directly.
Estimate gpe2(const PathFunction& g, LayeredBridge& bridge, double dispersion,
              RngStream& rng,
              std::optional<double> chord_integral = std::nullopt);

// Biased comparator: exp(-trapezoid of g over a skeleton with the given number
// of equally spaced interior points).
Estimate discretised_weight(const PathFunction& g, const BridgeSpec& spec,
                            int interior_points, RngStream& rng);

// p_k proportional to sqrt(f_k) minimises sum f_k / p_k over pmfs: the
// variance-optimal count distribution for a truncated moment sequence.
std::vector<double> optimal_kappa_pmf(const std::vector<double>& moments);

struct EstimatorDiagnostics {
  double sample_mean = 0.0;
  double sample_variance = 0.0;
  double mean_kappa = 0.0;
  double coefficient_of_variation = 0.0;  // RMSE / reference when supplied
  std::size_t n = 0;
  std::optional<double> lambda_w_estimate;
};

EstimatorDiagnostics estimator_diagnostics(
    const std::vector<Estimate>& draws,
    std::optional<double> reference_mean = std::nullopt);

// Fine-grid evaluation of the stochastic-rate functional
// sqrt(T * integral (U - g(W_s))^2 ds) along one simulated bridge path.
double lambda_w_fine_grid(const PathFunction& g, const BridgeSpec& spec,
                          double upper_bound, int n_steps, RngStream& rng);

// Attach (L_W, U_W) for g over the layered rectangle (layered mode), or the
// model's global phi bounds (global mode built elsewhere).
void attach_value_bounds(LayeredBridge& bridge, const DiffusionModel& model,
                         bool include_nu);

// Build the bridge an estimator draw needs: global-bounds fast path when
// configured and admissible, otherwise exact layer sampling plus tight bounds.
LayeredBridge prepare_bridge(const DiffusionModel& model, bool include_nu,
                             const BridgeSpec& spec, const EstimatorConfig& cfg,
                             RngStream& rng);

// One draw of the transition density estimate
// N_T(xt - x0) * exp(A(xt) - A(x0) - phi_shift*T) * r
// with r an unbiased draw for E[exp(-integral phi)] per the configured kind.
Estimate transition_density_estimate(const DiffusionModel& model, double x0,
                                     double xt, double t,
                                     const EstimatorConfig& cfg,
                                     RngStream& rng);

// Importance-sampling transition density estimate on a discretised skeleton:
// propose intermediate states from the conditioned-Gaussian bridge, weight by
// the product of Euler transition densities over the proposal density.
// Unbiased for the Euler approximation of the density, hence biased but
// consistent for the true density as the number of intermediate points grows.
double euler_bridge_density_estimate(const DiffusionModel& model, double x0,
                                     double xt, double t,
                                     int intermediate_points, RngStream& rng);

}  // namespace rwpf
