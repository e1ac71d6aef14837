#pragma once

#include "rwpf/dataset.hpp"
#include "rwpf/report.hpp"

namespace rwpf {

// Monte Carlo moments of exp(-trapezoid integral of g) over bridge paths
// simulated on a fine forward grid: the brute-force comparison target for the
// unbiased estimators, and the variance floor any of them can reach.
struct FineGridMoments {
  double mean = 0.0;
  double variance = 0.0;
  double se_mean = 0.0;
  double se_variance = 0.0;
  std::size_t n = 0;
};
FineGridMoments fine_grid_bridge_functional(const PathFunction& g,
                                            const BridgeSpec& spec,
                                            std::size_t n_paths, int n_steps,
                                            RngStream& rng);

// Estimator comparison for the sine drift at endpoint pairs
// (0,0), (0,pi), (pi,pi) over a unit interval: variance, mean count and CV per
// estimator at two draw budgets, plus the fine-grid oracle mean and the
// variance of the ideal (full-path) weight.
struct EstimatorBenchConfig {
  std::size_t draws = 10000;
  std::size_t reference_draws = 100000;
  std::size_t oracle_paths = 100000;
  int oracle_steps = 1000;
  double dispersion = 10.0;
  double layer_width_factor = 0.75;
  std::size_t batches = 50;  // batching grain for standard errors
  std::uint64_t seed = 1;
};
BenchmarkReport bench_estimators(const EstimatorBenchConfig& cfg);

// The six benchmark filters.
enum class FilterKind {
  exact_bootstrap,   // rejection propagation, observation-density weights
  exact_adapted,     // joint rejection adapted to the observation
  rw_poisson,        // random-weight filter, signed Poisson estimator
  rw_gpe2,           // random-weight filter, negative-binomial estimator
  discretised,       // random-weight filter, biased grid comparator
  rw_gpe2_pseudo,    // rw_gpe2 plus inserted pseudo-observation times
};
const char* filter_kind_name(FilterKind kind);
FilterKind filter_kind_from_name(const std::string& name);

// One replicate of one filter, summarised at the true observation times.
struct FilterRunSummary {
  std::vector<double> times;
  std::vector<double> means;
  std::vector<double> variances;    // posterior variance of the state
  std::vector<double> ess_weights;  // classic weight ESS
  std::vector<double> q05;          // posterior 5% / 95% quantiles of the
  std::vector<double> q95;          //   state and of its absolute value
  std::vector<double> mean_abs;
  std::vector<double> q05_abs;
  std::vector<double> q95_abs;
  long total_clamps = 0;
  double seconds = 0.0;
};
FilterRunSummary run_benchmark_filter(const Dataset& ds, FilterKind kind,
                                      std::size_t n_particles,
                                      double pseudo_delta_max,
                                      double discretised_spacing,
                                      std::uint64_t seed);

// The filter configuration a benchmark run uses for the random-weight kinds
// (proposal choice, estimator settings, pseudo-time insertion, resampling
// threshold). Throws for the rejection-sampling kinds, which take no config.
FilterConfig benchmark_filter_config(const Dataset& ds, FilterKind kind,
                                     std::size_t n_particles,
                                     double pseudo_delta_max,
                                     double discretised_spacing);

// Gaussian prior standard deviation matched to how each dataset's initial
// state was drawn (unit normal for the sine model, stationary law otherwise).
double benchmark_prior_sd(const Dataset& ds);

struct FilterBenchConfig {
  std::vector<FilterKind> filters = {
      FilterKind::exact_bootstrap, FilterKind::exact_adapted,
      FilterKind::rw_poisson,      FilterKind::rw_gpe2,
      FilterKind::discretised,     FilterKind::rw_gpe2_pseudo};
  std::size_t replicates = 100;
  // per-filter particle counts in the order of `filters`; empty = defaults
  // matched to roughly equal CPU cost per replicate
  std::vector<std::size_t> particle_counts;
  bool calibrate_cpu = false;        // rescale counts from measured step cost
  double pseudo_delta_max = 1.0;
  double discretised_spacing = 0.1;
  std::size_t batches = 30;
  std::uint64_t seed = 1;
};
std::size_t default_particle_count(FilterKind kind);

// Across-replicate variability of the filtering means on one shared dataset:
// per-filter mean across-step variance, efficiency relative to rw_gpe2, and
// the variance-ratio effective sample size (posterior variance over
// across-run variance of the mean estimate).
BenchmarkReport bench_filters(const Dataset& ds, const FilterBenchConfig& cfg);

// Empirical convergence rate: log-log regression of replicate RMSE against
// particle count, errors measured against a large-N reference run.
struct CltConfig {
  FilterKind kind = FilterKind::rw_gpe2;
  std::vector<std::size_t> n_grid = {250, 500, 1000, 2000, 4000};
  std::size_t replicates = 100;
  std::size_t reference_n = 32000;
  // the reference trajectory averages this many independent runs at
  // reference_n; their spread estimates the residual reference error, which
  // is subtracted from every measured MSE so it cannot flatten the fit
  std::size_t reference_runs = 8;
  std::size_t batches = 30;
  double pseudo_delta_max = 1.0;
  double discretised_spacing = 0.1;
  std::uint64_t seed = 1;
};
struct CltResult {
  double slope = 0.0;
  double ci_lo = 0.0;  // 95% interval from batch slopes
  double ci_hi = 0.0;
  std::vector<std::pair<double, double>> points;  // (log N, log RMSE)
  BenchmarkReport report;
};
CltResult clt_rate_check(const Dataset& ds, const CltConfig& cfg);

}  // namespace rwpf
