#include "rwpf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rwpf/exact.hpp"

namespace rwpf {
namespace {

struct Batched {
  double value = 0.0;
  double se = 0.0;
};

Batched summarise_batches(const std::vector<double>& per_batch) {
  Batched out;
  const std::size_t b = per_batch.size();
  if (b == 0) return out;
  double sum = 0.0;
  for (double v : per_batch) sum += v;
  out.value = sum / static_cast<double>(b);
  if (b > 1) {
    double ss = 0.0;
    for (double v : per_batch) ss += sq(v - out.value);
    out.se = std::sqrt(ss / static_cast<double>(b - 1) /
                       static_cast<double>(b));
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += sq(x - m);
  return ss / static_cast<double>(v.size() - 1);
}

double ols_slope(const std::vector<std::pair<double, double>>& pts) {
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (const auto& [x, y] : pts) {
    sxy += (x - mx) * (y - my);
    sxx += sq(x - mx);
  }
  return sxy / sxx;
}

// Two-sided 97.5% Student-t quantile; large-df values fall back to normal.
double student_t_975(std::size_t df) {
  static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447,
                                 2.365,  2.306, 2.262, 2.228, 2.201, 2.179,
                                 2.160,  2.145, 2.131, 2.120, 2.110, 2.101,
                                 2.093,  2.086, 2.080, 2.074, 2.069, 2.064,
                                 2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
  if (df == 0) return 12.706;
  if (df <= 30) return table[df - 1];
  return 1.96;
}

}  // namespace

FineGridMoments fine_grid_bridge_functional(const PathFunction& g,
                                            const BridgeSpec& spec,
                                            std::size_t n_paths, int n_steps,
                                            RngStream& rng) {
  if (n_steps < 1) throw std::invalid_argument("n_steps must be positive");
  validate(spec);
  const double h = spec.duration() / n_steps;
  const double end_terms = 0.5 * (g(spec.x) + g(spec.z));
  double s1 = 0.0;
  double s2 = 0.0;
  double s4 = 0.0;
  std::vector<double> values;
  values.reserve(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p) {
    double s_prev = spec.u;
    double w_prev = spec.x;
    double interior = 0.0;
    for (int i = 1; i < n_steps; ++i) {
      const double s = spec.u + h * i;
      const double m = bridge_conditional_mean(s_prev, w_prev, spec.t, spec.z, s);
      const double v = bridge_conditional_var(s_prev, spec.t, s);
      const double w = rng.normal(m, std::sqrt(v));
      interior += g(w);
      s_prev = s;
      w_prev = w;
    }
    const double value = std::exp(-h * (end_terms + interior));
    values.push_back(value);
    s1 += value;
  }
  FineGridMoments out;
  out.n = n_paths;
  out.mean = s1 / static_cast<double>(n_paths);
  for (double v : values) {
    s2 += sq(v - out.mean);
    s4 += sq(sq(v - out.mean));
  }
  out.variance = s2 / static_cast<double>(n_paths - 1);
  const double m2 = s2 / static_cast<double>(n_paths);
  const double m4 = s4 / static_cast<double>(n_paths);
  out.se_mean = std::sqrt(out.variance / static_cast<double>(n_paths));
  out.se_variance =
      std::sqrt(std::max(0.0, m4 - sq(m2)) / static_cast<double>(n_paths));
  return out;
}

BenchmarkReport bench_estimators(const EstimatorBenchConfig& cfg) {
  const DiffusionModel model = make_sine_model();
  const PathFunction phi = [&model](double u) { return eval_phi(model, u); };
  const double pi = std::numbers::pi;
  const struct {
    double x;
    double z;
    const char* label;
  } pairs[] = {{0.0, 0.0, "0,0"}, {0.0, pi, "0,pi"}, {pi, pi, "pi,pi"}};
  const char* estimators[] = {"pe", "gpe1", "gpe2", "dg-1", "dg-5"};

  BenchmarkReport report;
  report.metadata["model"] = "sine";
  report.metadata["interval"] = "1";
  report.metadata["draws"] = std::to_string(cfg.draws);
  report.metadata["reference_draws"] = std::to_string(cfg.reference_draws);
  report.metadata["oracle_paths"] = std::to_string(cfg.oracle_paths);
  report.metadata["oracle_steps"] = std::to_string(cfg.oracle_steps);
  report.metadata["dispersion"] = format_double(cfg.dispersion);
  report.metadata["layer_width_factor"] = format_double(cfg.layer_width_factor);
  report.metadata["seed"] = std::to_string(cfg.seed);

  const std::size_t batches = std::max<std::size_t>(2, cfg.batches);
  EstimatorConfig layered;
  layered.dispersion = cfg.dispersion;
  layered.use_global_bounds = false;
  layered.layer_width_factor = cfg.layer_width_factor;
  const double phi_upper = model.phi_global_bounds->hi;

  for (std::size_t pi_idx = 0; pi_idx < 3; ++pi_idx) {
    const auto& pr = pairs[pi_idx];
    const BridgeSpec spec{pr.x, pr.z, 0.0, 1.0};
    const std::string label(pr.label);

    // Brute-force target: mean of the functional and the variance of the
    // ideal full-path weight (the floor no unbiased one-draw scheme beats).
    RngStream oracle_rng(derive_seed(cfg.seed, 20, pi_idx, 0));
    const FineGridMoments oracle = fine_grid_bridge_functional(
        phi, spec, cfg.oracle_paths, cfg.oracle_steps, oracle_rng);
    report.add("oracle(" + label + ")", "mean", oracle.mean, oracle.se_mean,
               oracle.n);
    report.add("ideal(" + label + ")", "variance", oracle.variance,
               oracle.se_variance, oracle.n);

    // Long-run reference mean used as the CV denominator.
    RngStream ref_rng(derive_seed(cfg.seed, 22, pi_idx, 0));
    std::vector<double> ref_values;
    ref_values.reserve(cfg.reference_draws);
    for (std::size_t d = 0; d < cfg.reference_draws; ++d) {
      LayeredBridge bridge = prepare_bridge(model, false, spec, layered, ref_rng);
      const double chord = chord_g_integral(model, false, pr.x, pr.z, 1.0);
      ref_values.push_back(
          gpe2(phi, bridge, cfg.dispersion, ref_rng, chord).value);
    }
    const double ref_mean = mean_of(ref_values);
    report.add("reference(" + label + ")", "mean", ref_mean,
               std::sqrt(variance_of(ref_values) /
                         static_cast<double>(ref_values.size())),
               ref_values.size());

    // Two draw budgets: the headline block at cfg.draws and a long block at
    // ten times that, so variance/CV rows exist at both sample sizes.
    for (int block = 0; block < 2; ++block) {
    const std::size_t n_draws = block == 0 ? cfg.draws : 10 * cfg.draws;
    const std::string suffix =
        block == 0 ? std::string() : "@" + std::to_string(n_draws);
    for (std::size_t e = 0; e < std::size(estimators); ++e) {
      const std::string name(estimators[e]);
      RngStream rng(derive_seed(cfg.seed, block == 0 ? 21 : 23, e, pi_idx));
      std::vector<Estimate> draws;
      draws.reserve(n_draws);
      for (std::size_t d = 0; d < n_draws; ++d) {
        if (name == "pe") {
          draws.push_back(poisson_estimator(phi, spec, phi_upper, phi_upper, rng));
        } else if (name == "dg-1" || name == "dg-5") {
          // Importance-sampling density estimate rescaled to the functional
          // scale so means/CVs share one reference column; the constant
          // rescaling leaves the coefficient of variation unchanged.
          const int m = name == "dg-1" ? 1 : 5;
          const double envelope =
              gaussian_density(pr.z - pr.x, 1.0) *
              std::exp(model.potential(pr.z) - model.potential(pr.x) -
                       model.phi_shift);
          Estimate est;
          est.value =
              euler_bridge_density_estimate(model, pr.x, pr.z, 1.0, m, rng) /
              envelope;
          est.kappa = m;
          draws.push_back(est);
        } else {
          LayeredBridge bridge = prepare_bridge(model, false, spec, layered, rng);
          if (name == "gpe1") {
            draws.push_back(gpe1(phi, bridge, rng));
          } else {
            const double chord = chord_g_integral(model, false, pr.x, pr.z, 1.0);
            draws.push_back(gpe2(phi, bridge, cfg.dispersion, rng, chord));
          }
        }
      }
      const EstimatorDiagnostics diag = estimator_diagnostics(draws, ref_mean);

      // Standard errors from batch means of each statistic.
      const std::size_t bsize = std::max<std::size_t>(2, n_draws / batches);
      std::vector<double> b_var;
      std::vector<double> b_kappa;
      std::vector<double> b_cv;
      for (std::size_t start = 0; start + bsize <= n_draws; start += bsize) {
        std::vector<double> vals;
        double ksum = 0.0;
        double mse = 0.0;
        vals.reserve(bsize);
        for (std::size_t d = start; d < start + bsize; ++d) {
          vals.push_back(draws[d].value);
          ksum += static_cast<double>(draws[d].kappa);
          mse += sq(draws[d].value - ref_mean);
        }
        b_var.push_back(variance_of(vals));
        b_kappa.push_back(ksum / static_cast<double>(bsize));
        b_cv.push_back(std::sqrt(mse / static_cast<double>(bsize)) /
                       std::abs(ref_mean));
      }
      const std::string conf = name + "(" + label + ")" + suffix;
      report.add(conf, "mean", diag.sample_mean,
                 std::sqrt(diag.sample_variance / static_cast<double>(diag.n)),
                 diag.n);
      report.add(conf, "variance", diag.sample_variance,
                 summarise_batches(b_var).se, diag.n);
      report.add(conf, "mean_kappa", diag.mean_kappa,
                 summarise_batches(b_kappa).se, diag.n);
      report.add(conf, "cv", diag.coefficient_of_variation,
                 summarise_batches(b_cv).se, diag.n);
    }
    }
  }
  return report;
}

const char* filter_kind_name(FilterKind kind) {
  switch (kind) {
    case FilterKind::exact_bootstrap: return "bootstrap-exact";
    case FilterKind::exact_adapted: return "adapted-exact";
    case FilterKind::rw_poisson: return "rw-pe";
    case FilterKind::rw_gpe2: return "rw-gpe2";
    case FilterKind::discretised: return "discretised";
    case FilterKind::rw_gpe2_pseudo: return "rw-gpe2-pseudo";
  }
  throw std::invalid_argument("unknown filter kind");
}

FilterKind filter_kind_from_name(const std::string& name) {
  for (FilterKind k :
       {FilterKind::exact_bootstrap, FilterKind::exact_adapted,
        FilterKind::rw_poisson, FilterKind::rw_gpe2, FilterKind::discretised,
        FilterKind::rw_gpe2_pseudo}) {
    if (name == filter_kind_name(k)) return k;
  }
  throw std::invalid_argument("unknown filter name: " + name);
}

std::size_t default_particle_count(FilterKind kind) {
  switch (kind) {
    case FilterKind::exact_bootstrap: return 500;
    case FilterKind::exact_adapted: return 500;
    case FilterKind::rw_poisson: return 910;
    case FilterKind::rw_gpe2: return 1000;
    case FilterKind::discretised: return 1000;
    case FilterKind::rw_gpe2_pseudo: return 1000;
  }
  throw std::invalid_argument("unknown filter kind");
}

namespace {

FilterRunSummary run_exact_filter(const Dataset& ds,
                                  const DiffusionModel& model, FilterKind kind,
                                  std::size_t n, double sigma, double prior_sd,
                                  std::uint64_t seed) {
  if (ds.regime != Regime::noisy)
    throw std::invalid_argument(
        "rejection-sampling filters need Gaussian observations");
  FilterRunSummary out;
  std::vector<double> states(n);
  std::vector<double> weights(n, 1.0);
  {
    RngStream init(derive_seed(seed, 3, 0, 0));
    for (std::size_t j = 0; j < n; ++j) states[j] = init.normal(0.0, prior_sd);
  }
  double prev_time = 0.0;
  std::vector<double> new_states;
  std::vector<double> new_weights;
  std::uint64_t step = 0;
  for (const Observation& obs : ds.observations) {
    ++step;
    const double delta = obs.time - prev_time;
    prev_time = obs.time;
    RngStream rng(derive_seed(seed, 3, step, 0));
    if (kind == FilterKind::exact_bootstrap) {
      exact_bootstrap_step(model, states, weights, weights, obs.value, sigma,
                           delta, n, new_states, new_weights, rng);
    } else {
      exact_adapted_step(model, states, weights, obs.value, sigma, delta, n,
                         new_states, new_weights, rng);
    }
    states.swap(new_states);
    weights.swap(new_weights);
    double wsum = 0.0;
    double m = 0.0;
    double m_abs = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      wsum += weights[j];
      m += weights[j] * states[j];
      m_abs += weights[j] * std::abs(states[j]);
    }
    m /= wsum;
    m_abs /= wsum;
    double v = 0.0;
    for (std::size_t j = 0; j < n; ++j) v += weights[j] * sq(states[j] - m);
    v /= wsum;
    std::vector<double> abs_states(n);
    for (std::size_t j = 0; j < n; ++j) abs_states[j] = std::abs(states[j]);
    out.times.push_back(obs.time);
    out.means.push_back(m);
    out.variances.push_back(v);
    out.ess_weights.push_back(ess(weights));
    out.q05.push_back(weighted_quantile(states, weights, 0.05));
    out.q95.push_back(weighted_quantile(states, weights, 0.95));
    out.mean_abs.push_back(m_abs);
    out.q05_abs.push_back(weighted_quantile(abs_states, weights, 0.05));
    out.q95_abs.push_back(weighted_quantile(abs_states, weights, 0.95));
  }
  return out;
}

}  // namespace

double benchmark_prior_sd(const Dataset& ds) {
  const double rho = ds.params.count("rho") ? ds.params.at("rho") : 0.5;
  return ds.model == "sine" ? 1.0 : std::sqrt(1.0 / (2.0 * rho));
}

FilterConfig benchmark_filter_config(const Dataset& ds, FilterKind kind,
                                     std::size_t n_particles,
                                     double pseudo_delta_max,
                                     double discretised_spacing) {
  if (kind == FilterKind::exact_bootstrap || kind == FilterKind::exact_adapted)
    throw std::invalid_argument(
        "rejection-sampling filters take no random-weight config");
  const DiffusionModel model = model_for_dataset(ds);
  FilterConfig fc;
  fc.n_particles = n_particles;
  fc.observation_sigma = ds.params.count("sigma") ? ds.params.at("sigma") : 0.2;
  fc.proposal =
      model.transition_mean ? ProposalKind::prior : ProposalKind::ozaki;
  const bool global_ok = model.phi_global_bounds.has_value() &&
                         ds.regime != Regime::point_process;
  switch (kind) {
    case FilterKind::rw_poisson:
      fc.estimator.kind = EstimatorKind::poisson;
      break;
    case FilterKind::rw_gpe2:
      fc.estimator.kind = EstimatorKind::gpe2;
      fc.estimator.use_global_bounds = global_ok;
      break;
    case FilterKind::discretised:
      fc.estimator.kind = EstimatorKind::discretised;
      fc.estimator.grid_spacing = discretised_spacing;
      break;
    case FilterKind::rw_gpe2_pseudo:
      fc.estimator.kind = EstimatorKind::gpe2;
      fc.estimator.use_global_bounds = global_ok;
      fc.delta_max = pseudo_delta_max;
      break;
    default:
      throw std::invalid_argument("unhandled filter kind");
  }
  if (ds.regime == Regime::point_process) {
    // Event-stream runs refresh at pseudo times and resample lazily so the
    // weight ESS stays observable between resampling epochs.
    fc.delta_max = pseudo_delta_max;
    fc.resample_threshold = static_cast<double>(n_particles) / 10.0;
  }
  return fc;
}

FilterRunSummary run_benchmark_filter(const Dataset& ds, FilterKind kind,
                                      std::size_t n_particles,
                                      double pseudo_delta_max,
                                      double discretised_spacing,
                                      std::uint64_t seed) {
  const DiffusionModel model = model_for_dataset(ds);
  const double sigma =
      ds.params.count("sigma") ? ds.params.at("sigma") : 0.2;
  const double prior_sd = benchmark_prior_sd(ds);

  const auto start = std::chrono::steady_clock::now();
  FilterRunSummary out;
  if (kind == FilterKind::exact_bootstrap || kind == FilterKind::exact_adapted) {
    out = run_exact_filter(ds, model, kind, n_particles, sigma, prior_sd, seed);
  } else {
    const FilterConfig fc = benchmark_filter_config(
        ds, kind, n_particles, pseudo_delta_max, discretised_spacing);
    const FilterResult res =
        run_filter(model, ds.observations, fc, 0.0, prior_sd, seed);
    for (const StepRecord& rec : res.trace) {
      if (rec.pseudo) continue;
      out.times.push_back(rec.time);
      out.means.push_back(rec.mean);
      out.variances.push_back(rec.variance);
      out.ess_weights.push_back(rec.ess_weights);
      out.q05.push_back(rec.q05);
      out.q95.push_back(rec.q95);
      out.mean_abs.push_back(rec.mean_abs);
      out.q05_abs.push_back(rec.q05_abs);
      out.q95_abs.push_back(rec.q95_abs);
    }
    out.total_clamps = res.total_clamps;
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              start)
                    .count();
  return out;
}

BenchmarkReport bench_filters(const Dataset& ds, const FilterBenchConfig& cfg) {
  if (cfg.replicates < 2)
    throw std::invalid_argument("need at least two replicates");
  std::vector<std::size_t> counts = cfg.particle_counts;
  if (counts.empty()) {
    for (FilterKind k : cfg.filters) counts.push_back(default_particle_count(k));
  }
  if (counts.size() != cfg.filters.size())
    throw std::invalid_argument("one particle count per filter required");

  if (cfg.calibrate_cpu) {
    // Rescale counts so one replicate of every filter costs about as much as
    // the reference (rw_gpe2 when present, else the first filter).
    std::vector<double> secs(cfg.filters.size());
    for (std::size_t f = 0; f < cfg.filters.size(); ++f) {
      secs[f] = run_benchmark_filter(ds, cfg.filters[f], counts[f],
                                     cfg.pseudo_delta_max,
                                     cfg.discretised_spacing,
                                     derive_seed(cfg.seed, 29, f, 0))
                    .seconds;
    }
    std::size_t ref = 0;
    for (std::size_t f = 0; f < cfg.filters.size(); ++f)
      if (cfg.filters[f] == FilterKind::rw_gpe2) ref = f;
    for (std::size_t f = 0; f < cfg.filters.size(); ++f) {
      const double scaled =
          static_cast<double>(counts[f]) * secs[ref] / std::max(secs[f], 1e-9);
      counts[f] = std::max<std::size_t>(
          50, static_cast<std::size_t>(std::llround(scaled)));
    }
  }

  const std::size_t batches =
      std::min(std::max<std::size_t>(2, cfg.batches), cfg.replicates / 2);
  const std::size_t bsize = cfg.replicates / batches;

  BenchmarkReport report;
  report.metadata["model"] = ds.model;
  report.metadata["regime"] = regime_name(ds.regime);
  report.metadata["observations"] = std::to_string(ds.observations.size());
  report.metadata["replicates"] = std::to_string(cfg.replicates);
  report.metadata["seed"] = std::to_string(cfg.seed);

  std::vector<double> mean_across_var(cfg.filters.size(), 0.0);
  for (std::size_t f = 0; f < cfg.filters.size(); ++f) {
    const FilterKind kind = cfg.filters[f];
    const std::string conf = filter_kind_name(kind);
    std::vector<FilterRunSummary> runs;
    runs.reserve(cfg.replicates);
    double seconds = 0.0;
    double clamps = 0.0;
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
      runs.push_back(run_benchmark_filter(
          ds, kind, counts[f], cfg.pseudo_delta_max, cfg.discretised_spacing,
          derive_seed(cfg.seed, 30, f, r)));
      seconds += runs.back().seconds;
      clamps += static_cast<double>(runs.back().total_clamps);
    }
    const std::size_t T = runs.front().times.size();
    for (const auto& run : runs) {
      if (run.times.size() != T)
        throw std::runtime_error("replicates disagree on report times");
    }

    // Across-replicate variance of the mean estimate, averaged over times.
    std::vector<double> across(T, 0.0);
    std::vector<double> post_var(T, 0.0);
    double mean_ess = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<double> col(cfg.replicates);
      for (std::size_t r = 0; r < cfg.replicates; ++r) {
        col[r] = runs[r].means[t];
        post_var[t] += runs[r].variances[t];
        mean_ess += runs[r].ess_weights[t];
      }
      across[t] = variance_of(col);
      post_var[t] /= static_cast<double>(cfg.replicates);
    }
    mean_ess /= static_cast<double>(cfg.replicates * T);
    mean_across_var[f] = mean_of(across);

    std::vector<double> b_across;
    std::vector<double> b_ess;
    for (std::size_t b = 0; b < batches; ++b) {
      double acc = 0.0;
      double ess_acc = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> col;
        col.reserve(bsize);
        for (std::size_t r = b * bsize; r < (b + 1) * bsize; ++r)
          col.push_back(runs[r].means[t]);
        const double v = variance_of(col);
        acc += v;
        ess_acc += post_var[t] / std::max(v, 1e-300);
      }
      b_across.push_back(acc / static_cast<double>(T));
      b_ess.push_back(ess_acc / static_cast<double>(T));
    }

    double ess_by_var = 0.0;
    for (std::size_t t = 0; t < T; ++t)
      ess_by_var += post_var[t] / std::max(across[t], 1e-300);
    ess_by_var /= static_cast<double>(T);

    report.add(conf, "particles", static_cast<double>(counts[f]), 0.0,
               cfg.replicates);
    report.add(conf, "mean_across_run_variance", mean_across_var[f],
               summarise_batches(b_across).se, cfg.replicates);
    report.add(conf, "ess_by_variance", ess_by_var,
               summarise_batches(b_ess).se, cfg.replicates);
    report.add(conf, "mean_ess_weights", mean_ess, 0.0, cfg.replicates);
    report.add(conf, "mean_seconds",
               seconds / static_cast<double>(cfg.replicates), 0.0,
               cfg.replicates);
    report.add(conf, "mean_clamps",
               clamps / static_cast<double>(cfg.replicates), 0.0,
               cfg.replicates);
  }

  // Efficiency of each filter relative to the negative-binomial random-weight
  // filter: ratio of mean across-replicate variances.
  std::ptrdiff_t ref = -1;
  for (std::size_t f = 0; f < cfg.filters.size(); ++f)
    if (cfg.filters[f] == FilterKind::rw_gpe2) ref = static_cast<std::ptrdiff_t>(f);
  if (ref >= 0) {
    for (std::size_t f = 0; f < cfg.filters.size(); ++f) {
      report.add(filter_kind_name(cfg.filters[f]), "relative_efficiency",
                 mean_across_var[static_cast<std::size_t>(ref)] /
                     std::max(mean_across_var[f], 1e-300),
                 0.0, cfg.replicates);
    }
  }
  return report;
}

CltResult clt_rate_check(const Dataset& ds, const CltConfig& cfg) {
  if (cfg.n_grid.size() < 2)
    throw std::invalid_argument("need at least two particle counts");
  const std::size_t batches =
      std::min(std::max<std::size_t>(2, cfg.batches), cfg.replicates);
  const std::size_t bsize = cfg.replicates / batches;
  if (bsize == 0) throw std::invalid_argument("more batches than replicates");

  // Reference trajectory: mean of several independent large-N runs.  The
  // across-run spread estimates the reference's own mean-squared error, which
  // would otherwise enter every measured MSE as a common floor and bias the
  // fitted slope toward zero at the large-N end.
  const std::size_t n_ref = std::max<std::size_t>(1, cfg.reference_runs);
  std::vector<double> ref_mean, ref_m2;
  std::size_t T = 0;
  for (std::size_t k = 0; k < n_ref; ++k) {
    const FilterRunSummary run = run_benchmark_filter(
        ds, cfg.kind, cfg.reference_n, cfg.pseudo_delta_max,
        cfg.discretised_spacing, derive_seed(cfg.seed, 40, k, 0));
    if (k == 0) {
      T = run.times.size();
      ref_mean.assign(T, 0.0);
      ref_m2.assign(T, 0.0);
    } else if (run.times.size() != T) {
      throw std::runtime_error("reference run disagrees on report times");
    }
    for (std::size_t t = 0; t < T; ++t) {
      const double d = run.means[t] - ref_mean[t];
      ref_mean[t] += d / static_cast<double>(k + 1);
      ref_m2[t] += d * (run.means[t] - ref_mean[t]);
    }
  }
  // Mean over steps of Var(reference mean at t) = Var_k(t) / n_ref.
  double ref_floor = 0.0;
  if (n_ref > 1) {
    for (std::size_t t = 0; t < T; ++t)
      ref_floor += ref_m2[t] / static_cast<double>(n_ref - 1) /
                   static_cast<double>(n_ref);
    ref_floor /= static_cast<double>(T);
  }

  CltResult result;
  result.report.metadata["filter"] = filter_kind_name(cfg.kind);
  result.report.metadata["model"] = ds.model;
  result.report.metadata["replicates"] = std::to_string(cfg.replicates);
  result.report.metadata["reference_n"] = std::to_string(cfg.reference_n);
  result.report.metadata["seed"] = std::to_string(cfg.seed);

  std::vector<std::vector<double>> batch_log_rmse(
      batches, std::vector<double>(cfg.n_grid.size(), 0.0));
  for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
    const std::size_t n = cfg.n_grid[ni];
    std::vector<double> err2(cfg.replicates, 0.0);
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
      const FilterRunSummary run = run_benchmark_filter(
          ds, cfg.kind, n, cfg.pseudo_delta_max, cfg.discretised_spacing,
          derive_seed(cfg.seed, 41, ni, r));
      if (run.times.size() != T)
        throw std::runtime_error("replicate disagrees with reference times");
      double acc = 0.0;
      for (std::size_t t = 0; t < T; ++t)
        acc += sq(run.means[t] - ref_mean[t]);
      err2[r] = acc / static_cast<double>(T);
    }
    // Debias: measured MSE = true MSE + reference floor (independent errors).
    const auto debias = [&](double mse) {
      return std::max(mse - ref_floor, 0.01 * mse);
    };
    const double rmse = std::sqrt(debias(mean_of(err2)));
    result.points.emplace_back(std::log(static_cast<double>(n)),
                               std::log(rmse));
    std::vector<double> b_rmse;
    for (std::size_t b = 0; b < batches; ++b) {
      double acc = 0.0;
      for (std::size_t r = b * bsize; r < (b + 1) * bsize; ++r) acc += err2[r];
      const double v = std::sqrt(debias(acc / static_cast<double>(bsize)));
      b_rmse.push_back(v);
      batch_log_rmse[b][ni] = std::log(v);
    }
    result.report.add("N=" + std::to_string(n), "rmse", rmse,
                      summarise_batches(b_rmse).se, cfg.replicates);
  }

  result.slope = ols_slope(result.points);
  std::vector<double> slopes;
  for (std::size_t b = 0; b < batches; ++b) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni)
      pts.emplace_back(std::log(static_cast<double>(cfg.n_grid[ni])),
                       batch_log_rmse[b][ni]);
    slopes.push_back(ols_slope(pts));
  }
  const Batched sl = summarise_batches(slopes);
  const double half = student_t_975(batches - 1) * sl.se;
  result.ci_lo = sl.value - half;
  result.ci_hi = sl.value + half;
  result.report.add("fit", "slope", result.slope, sl.se, cfg.replicates);
  result.report.add("fit", "slope_ci_lo", result.ci_lo, 0.0, cfg.replicates);
  result.report.add("fit", "slope_ci_hi", result.ci_hi, 0.0, cfg.replicates);
  return result;
}

}  // namespace rwpf
