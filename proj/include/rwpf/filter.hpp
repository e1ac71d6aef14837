#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rwpf/estimators.hpp"
#include "rwpf/model.hpp"

namespace rwpf {

// Observation regimes: a noisy value with a known density, a constraint
// satisfied by construction, or an event time of a state-driven point process.
enum class Regime { noisy, constrained, point_process };

struct Observation {
  double time = 0.0;
  Regime regime = Regime::noisy;
  double value = std::numeric_limits<double>::quiet_NaN();
  bool is_pseudo = false;  // inserted no-information time
};

struct Particle {
  double state = 0.0;
  double weight = 0.0;
  std::size_t ancestor = 0;
};

struct ParticleSet {
  std::vector<Particle> particles;
  double time = 0.0;
  double ess_weights = 0.0;
  double ess_betas = 0.0;
  bool resampled = false;
  long clamp_count = 0;  // negative estimator draws clamped to zero this step
};

enum class ResampleScheme { multinomial, stratified, residual };
enum class ProposalKind { prior, ozaki };

struct FilterConfig {
  std::size_t n_particles = 1000;
  // resample when the selection-weight ESS drops below this many particles;
  // n_particles (the default -1 sentinel) resamples essentially every step
  double resample_threshold = -1.0;
  ResampleScheme scheme = ResampleScheme::stratified;
  ProposalKind proposal = ProposalKind::ozaki;
  EstimatorConfig estimator;
  std::optional<double> delta_max;  // insert pseudo-observations up to this gap
  double observation_sigma = 0.2;   // regime-A Gaussian noise sd
  // regime-B constraint factor f(x_new, y) in [0, inf); identity-1 by default
  std::function<double(double, double)> constraint_f;
};

struct DegenerateFilterError : std::runtime_error {
  explicit DegenerateFilterError(const std::string& what)
      : std::runtime_error(what) {}
};

// (sum v)^2 / sum v^2; all-zero input is a degenerate filter state.
double ess(const std::vector<double>& values);

// N ancestor indices with E[#copies of j] = N * w_j / sum(w) for every scheme.
std::vector<std::size_t> resample_indices(const std::vector<double>& weights,
                                          std::size_t n, ResampleScheme scheme,
                                          RngStream& rng);

// Locally-linearised one-step Gaussian approximation of the SDE transition.
struct OzakiProposal {
  double eta = 0.0;   // mean
  double tau2 = 0.0;  // variance
};
OzakiProposal ozaki_proposal(const DiffusionModel& model, double x,
                             double delta);

// Gaussian-product combination of a Gaussian state proposal with a Gaussian
// observation y (noise variance sigma2): the fully adapted proposal.
OzakiProposal combine_with_observation(const OzakiProposal& prior, double y,
                                       double sigma2);

// h factor for noisy/constrained regimes:
//   (w/beta) * f_value * N_delta(x_new - x_prev)
//   * exp(A(x_new) - A(x_prev) - l*delta) / q_density_value.
// Computed in log space; the caller supplies w and beta on a common scale.
double weight_h_noisy(double w_prev, double beta, double x_prev, double x_new,
                      const DiffusionModel& model, double delta,
                      double q_density_value, double f_value);

// h factor for the point-process regime: as above with f_value replaced by
// the event intensity at the new state, omitted entirely for pseudo times.
double weight_h_events(double w_prev, double beta, double x_prev, double x_new,
                       const DiffusionModel& model, double delta,
                       double q_density_value, bool is_pseudo);

// Per-(step, slot) stream derivation; slot_seeds overrides the derivation for
// the exchangeability property test.
struct StepRng {
  std::uint64_t master = 0;
  long step = 0;
  const std::vector<std::uint64_t>* slot_seeds = nullptr;
};

// One filter step: selection weights and ESS test, resample-or-carry with
// delta bookkeeping, proposal draw, one estimator draw per particle, and the
// product weight delta * h * r. Negative estimator draws are clamped to zero
// and counted.
ParticleSet rwpf_step(const ParticleSet& ps, const Observation& obs,
                      const FilterConfig& cfg, const DiffusionModel& model,
                      const StepRng& rng);

// Merged, sorted sequence whose consecutive gaps (measured from start_time)
// never exceed delta_max; insertions are equally spaced no-information
// observations, the minimal number per gap.
std::vector<Observation> insert_pseudo_observations(
    const std::vector<Observation>& obs, double delta_max,
    double start_time = 0.0);

// Self-normalised weighted mean of fn over the particle states.
double filter_estimate(const ParticleSet& ps,
                       const std::function<double(double)>& fn);

// Weighted quantile (q in [0,1]) of values under non-negative weights.
double weighted_quantile(std::vector<double> values,
                         std::vector<double> weights, double q);

struct StepRecord {
  double time = 0.0;
  bool pseudo = false;
  double ess_weights = 0.0;
  double ess_betas = 0.0;
  bool resampled = false;
  long clamp_count = 0;
  double mean = 0.0;
  double variance = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
  double mean_abs = 0.0;
  double q05_abs = 0.0;
  double q95_abs = 0.0;
};

struct FilterResult {
  std::vector<StepRecord> trace;
  ParticleSet last;
  long total_clamps = 0;
};

// Full filter run: Gaussian prior draw at time start_time, pseudo-observation
// insertion per cfg.delta_max, then one rwpf_step per observation.
FilterResult run_filter(const DiffusionModel& model,
                        const std::vector<Observation>& observations,
                        const FilterConfig& cfg, double prior_mean,
                        double prior_sd, std::uint64_t seed,
                        double start_time = 0.0);

}  // namespace rwpf
