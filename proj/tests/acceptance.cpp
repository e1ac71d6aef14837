// Acceptance gates for the library: thirteen numbered end-to-end checks, each
// printing exactly one line "criterion K: PASS|FAIL - detail". Every
// tolerance, seed and sample size is pinned here in code. Run with
// --criterion K (repeatable, comma lists allowed) to select a subset; the
// default runs all thirteen. Exit status is 1 when any selected gate fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rwpf/bench.hpp"
#include "rwpf/dataset.hpp"
#include "rwpf/estimators.hpp"
#include "rwpf/exact.hpp"
#include "rwpf/filter.hpp"
#include "rwpf/kalman.hpp"
#include "rwpf/model.hpp"
#include "rwpf/report.hpp"
#include "rwpf/rng.hpp"
#include "support/stats.hpp"

using namespace rwpf;

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

struct Gate {
  bool pass = true;
  std::vector<std::string> problems;
  std::string summary;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    if (problems.size() < 8) problems.push_back(what);
  }
  std::string detail() const {
    if (pass) return summary;
    std::string out;
    for (const auto& p : problems) {
      if (!out.empty()) out += "; ";
      out += p;
    }
    return out;
  }
};

struct RunningMoments {
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  void add(double v) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  double variance() const { return m2 / static_cast<double>(n - 1); }
  double se_mean() const {
    return std::sqrt(variance() / static_cast<double>(n));
  }
};

struct EndpointPair {
  double x;
  double z;
  const char* label;
};
constexpr EndpointPair kPairs[3] = {
    {0.0, 0.0, "0,0"}, {0.0, kPi, "0,pi"}, {kPi, kPi, "pi,pi"}};

// ---------------------------------------------------------------------------
// criterion 1: one-draw estimator means agree with brute-force path averages
// ---------------------------------------------------------------------------

Gate criterion1() {
  Gate g;
  const auto start = std::chrono::steady_clock::now();
  const DiffusionModel model = make_sine_model();
  const PathFunction phi = [&model](double u) { return eval_phi(model, u); };
  const double c = 9.0 / 8.0;  // tilt constant and Poisson rate for PE
  const std::size_t n_draws = 100000;
  const EstimatorConfig layered;  // exact layer sampling, width factor 0.75
  const char* names[3] = {"pe", "gpe1", "gpe2"};

  double worst_z = 0.0;
  for (std::size_t ip = 0; ip < 3; ++ip) {
    const EndpointPair& pr = kPairs[ip];
    const BridgeSpec spec{pr.x, pr.z, 0.0, 1.0};
    RngStream oracle_rng(derive_seed(1, 60, ip, 0));
    const FineGridMoments oracle =
        fine_grid_bridge_functional(phi, spec, 1000000, 1000, oracle_rng);
    for (std::size_t e = 0; e < 3; ++e) {
      RngStream rng(derive_seed(1, 61 + e, ip, 0));
      RunningMoments acc;
      for (std::size_t d = 0; d < n_draws; ++d) {
        if (e == 0) {
          acc.add(poisson_estimator(phi, spec, c, c, rng).value);
        } else {
          LayeredBridge bridge = prepare_bridge(model, false, spec, layered, rng);
          if (e == 1) {
            acc.add(gpe1(phi, bridge, rng).value);
          } else {
            const double chord = chord_g_integral(model, false, pr.x, pr.z, 1.0);
            acc.add(gpe2(phi, bridge, 10.0, rng, chord).value);
          }
        }
      }
      const double se =
          std::sqrt(acc.se_mean() * acc.se_mean() +
                    oracle.se_mean * oracle.se_mean);
      const double z = std::fabs(acc.mean - oracle.mean) / se;
      worst_z = std::max(worst_z, z);
      g.require(z <= 3.0, std::string(names[e]) + "(" + pr.label + ") mean " +
                              fmt(acc.mean) + " vs oracle " + fmt(oracle.mean) +
                              " is " + fmt(z) + " combined SEs away");
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  g.require(secs <= 300.0, "runtime " + fmt(secs) + " s exceeds 300 s");
  g.summary = "9 estimator/endpoint means within 3 SE of 1e6-path oracles "
              "(worst z = " + fmt(worst_z) + ", " + fmt(secs) + " s)";
  return g;
}

// ---------------------------------------------------------------------------
// criteria 2-4 share one benchmark table (10^4-draw block plus 10^5 block)
// ---------------------------------------------------------------------------

const BenchmarkReport& table_report() {
  static const BenchmarkReport rep = [] {
    EstimatorBenchConfig cfg;
    cfg.draws = 10000;
    cfg.reference_draws = 100000;
    cfg.oracle_paths = 100000;
    cfg.oracle_steps = 1000;
    cfg.dispersion = 10.0;
    cfg.layer_width_factor = 0.75;
    cfg.batches = 50;
    cfg.seed = 1;
    return bench_estimators(cfg);
  }();
  return rep;
}

Gate criterion2() {
  Gate g;
  const auto start = std::chrono::steady_clock::now();
  const BenchmarkReport& rep = table_report();

  const double var_target[3][3] = {{0.202, 0.200, 0.027},
                                   {4.21e-3, 0.208, 0.034},
                                   {2.08e-3, 0.220, 0.033}};
  const double kappa_target[3][3] = {{1.118, 1.126, 1.121},
                                     {0.130, 1.091, 0.744},
                                     {0.119, 0.329, 0.735}};
  const char* names[3] = {"pe", "gpe1", "gpe2"};

  double worst_var_rel = 0.0;
  double worst_kappa_abs = 0.0;
  for (std::size_t e = 0; e < 3; ++e) {
    for (std::size_t ip = 0; ip < 3; ++ip) {
      const std::string conf =
          std::string(names[e]) + "(" + kPairs[ip].label + ")";
      const double v = rep.find(conf, "variance").value;
      const double rel = std::fabs(v / var_target[e][ip] - 1.0);
      worst_var_rel = std::max(worst_var_rel, rel);
      g.require(rel <= 0.30, conf + " variance " + fmt(v) + " deviates " +
                                 fmt(100.0 * rel) + "% from " +
                                 fmt(var_target[e][ip]));
      const double k = rep.find(conf, "mean_kappa").value;
      const double dev = std::fabs(k - kappa_target[e][ip]);
      worst_kappa_abs = std::max(worst_kappa_abs, dev);
      g.require(dev <= 0.05, conf + " mean count " + fmt(k) + " is " +
                                 fmt(dev) + " from " + fmt(kappa_target[e][ip]));
      if (e == 0) {
        // the tilted-Poisson count mean is lambda*t = 9/8 analytically
        g.require(std::fabs(k - 1.125) <= 0.05,
                  conf + " mean count " + fmt(k) + " is not within 0.05 of " +
                      "the analytic 1.125");
      }
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  g.require(secs <= 300.0, "runtime " + fmt(secs) + " s exceeds 300 s");
  g.summary = "variance rows within 30% (worst " + fmt(100.0 * worst_var_rel) +
              "%), count rows within 0.05 (worst " + fmt(worst_kappa_abs) +
              "), " + fmt(secs) + " s";
  return g;
}

Gate criterion3() {
  Gate g;
  const BenchmarkReport& rep = table_report();
  const double v_pe = rep.find("pe(0,0)", "variance").value;
  const double v_g1 = rep.find("gpe1(0,0)", "variance").value;
  const double v_g2 = rep.find("gpe2(0,0)", "variance").value;
  const double ratio = v_pe / v_g1;
  g.require(ratio >= 10.0, "Var(pe)/Var(gpe1) at (0,0) is " + fmt(ratio) +
                               " < 10");
  g.require(v_g2 <= v_g1, "Var(gpe2) " + fmt(v_g2) + " > Var(gpe1) " +
                              fmt(v_g1) + " at (0,0)");
  g.summary = "Var(pe)/Var(gpe1) = " + fmt(ratio) + " at (0,0); Var(gpe2) = " +
              fmt(v_g2) + " <= Var(gpe1) = " + fmt(v_g1);
  return g;
}

Gate criterion4() {
  Gate g;
  const BenchmarkReport& rep = table_report();
  const char* names[4] = {"pe", "gpe2", "dg-1", "dg-5"};
  const double cv_target[4][3] = {{1.25, 0.93, 0.17},
                                  {0.13, 0.78, 0.20},
                                  {0.50, 0.45, 0.30},
                                  {0.28, 0.19, 0.22}};
  double worst_rel = 0.0;
  for (std::size_t e = 0; e < 4; ++e) {
    for (std::size_t ip = 0; ip < 3; ++ip) {
      const std::string conf =
          std::string(names[e]) + "(" + kPairs[ip].label + ")";
      const double cv = rep.find(conf, "cv").value;
      const double rel = std::fabs(cv / cv_target[e][ip] - 1.0);
      worst_rel = std::max(worst_rel, rel);
      g.require(rel <= 0.30, conf + " cv " + fmt(cv) + " deviates " +
                                 fmt(100.0 * rel) + "% from " +
                                 fmt(cv_target[e][ip]));
    }
  }
  g.summary =
      "12 coefficient-of-variation rows within 30% (worst deviation " +
      fmt(100.0 * worst_rel) + "%)";
  return g;
}

// ---------------------------------------------------------------------------
// criterion 5: the Poisson-count bounded estimator never leaves [0, e^{-L t}]
// ---------------------------------------------------------------------------

Gate criterion5() {
  Gate g;
  const DiffusionModel model = make_sine_model();
  const PathFunction phi = [&model](double u) { return eval_phi(model, u); };
  const EstimatorConfig layered;
  long checked = 0;
  long violations = 0;
  for (std::size_t ip = 0; ip < 3; ++ip) {
    const BridgeSpec spec{kPairs[ip].x, kPairs[ip].z, 0.0, 1.0};
    RngStream rng(derive_seed(5, 60, ip, 0));
    for (std::size_t d = 0; d < 100000; ++d) {
      LayeredBridge bridge = prepare_bridge(model, false, spec, layered, rng);
      const double upper = std::exp(-bridge.value_bounds().lo * 1.0);
      const Estimate est = gpe1(phi, bridge, rng);
      ++checked;
      if (est.value < 0.0 || est.value > upper * (1.0 + 1e-12)) {
        ++violations;
        if (violations <= 3) {
          g.require(false, "draw " + std::to_string(d) + " at (" +
                               kPairs[ip].label + ") = " + fmt(est.value) +
                               " outside [0, " + fmt(upper) + "]");
        }
      }
    }
  }
  g.require(violations == 0,
            std::to_string(violations) + " of " + std::to_string(checked) +
                " draws left the bound interval");
  g.summary = std::to_string(checked) +
              " draws all inside [0, e^{-L t}] for their sampled layer";
  return g;
}

// ---------------------------------------------------------------------------
// criterion 6: the square-root count pmf minimises sum f_k / p_k
// ---------------------------------------------------------------------------

Gate criterion6() {
  Gate g;
  long violations = 0;
  double worst_margin = 1e300;
  for (std::uint64_t r = 0; r < 100; ++r) {
    RngStream rng(derive_seed(6, 60, r, 0));
    const std::size_t len = 2 + static_cast<std::size_t>(r % 7);
    std::vector<double> f(len);
    for (double& v : f) v = std::exp(rng.normal(0.0, 1.0));
    const std::vector<double> best = optimal_kappa_pmf(f);
    double obj_best = 0.0;
    for (std::size_t k = 0; k < len; ++k) obj_best += f[k] / best[k];
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> p(len);
      double total = 0.0;
      for (double& v : p) {
        v = rng.uniform(1e-3, 1.0);
        total += v;
      }
      double obj = 0.0;
      for (std::size_t k = 0; k < len; ++k) obj += f[k] / (p[k] / total);
      worst_margin = std::min(worst_margin, obj - obj_best);
      if (obj < obj_best * (1.0 - 1e-12)) {
        ++violations;
        if (violations <= 3) {
          g.require(false, "sequence " + std::to_string(r) + " trial " +
                               std::to_string(trial) + ": random pmf scored " +
                               fmt(obj) + " < optimal " + fmt(obj_best));
        }
      }
    }
  }
  g.require(violations == 0,
            std::to_string(violations) + " random pmfs beat the optimum");
  g.summary = "square-root pmf minimal across 100 sequences x 1000 random "
              "pmfs (closest margin " + fmt(worst_margin) + ")";
  return g;
}

// ---------------------------------------------------------------------------
// criterion 7: rejection-sampled transitions match the estimated density and
// compose over half steps
// ---------------------------------------------------------------------------

Gate criterion7() {
  Gate g;
  const DiffusionModel model = make_sine_model();

  // Reference CDF on [-4, 4]: 41 density nodes, each the mean of 1e5
  // independent unbiased transition-density draws, integrated by trapezoid.
  const int n_nodes = 41;
  const double lo = -4.0, hi = 4.0;
  const double h = (hi - lo) / (n_nodes - 1);
  EstimatorConfig cfg;  // negative-binomial kind with layered bounds
  std::vector<double> node(n_nodes), dens(n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    node[i] = lo + h * i;
    RngStream rng(derive_seed(7, 60, static_cast<std::uint64_t>(i), 0));
    RunningMoments acc;
    for (std::size_t d = 0; d < 100000; ++d) {
      acc.add(transition_density_estimate(model, 0.0, node[i], 1.0, cfg, rng)
                  .value);
    }
    dens[i] = std::max(acc.mean, 0.0);
  }
  std::vector<double> cum(n_nodes, 0.0);
  for (int i = 1; i < n_nodes; ++i) {
    cum[i] = cum[i - 1] + 0.5 * h * (dens[i - 1] + dens[i]);
  }
  const double total = cum.back();
  const auto cdf = [&](double x) {
    if (x <= lo) return 0.0;
    if (x >= hi) return 1.0;
    const int i = std::min(n_nodes - 2, static_cast<int>((x - lo) / h));
    const double frac = (x - (lo + h * i)) / h;
    return (cum[i] + frac * (cum[i + 1] - cum[i])) / total;
  };

  int density_pass = 0;
  int compose_pass = 0;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    std::vector<double> direct(10000);
    RngStream er(derive_seed(7, 61, s, 0));
    for (double& v : direct) v = exact_propagate(model, 0.0, 1.0, er);
    if (teststat::ks_one_sample_pvalue(direct, cdf) > 0.01) ++density_pass;

    std::vector<double> whole(10000), halves(10000);
    RngStream ar(derive_seed(7, 62, s, 0));
    RngStream br(derive_seed(7, 63, s, 0));
    for (double& v : whole) v = exact_propagate(model, 0.0, 1.0, ar);
    for (double& v : halves) {
      const double mid = exact_propagate(model, 0.0, 0.5, br);
      v = exact_propagate(model, mid, 0.5, br);
    }
    if (teststat::ks_two_sample_pvalue(whole, halves) > 0.01) ++compose_pass;
  }
  g.require(density_pass >= 9, "KS against estimated density passed only " +
                                   std::to_string(density_pass) + "/10 seeds");
  g.require(compose_pass >= 9, "half-step composition KS passed only " +
                                   std::to_string(compose_pass) + "/10 seeds");
  g.summary = "density KS " + std::to_string(density_pass) +
              "/10, composition KS " + std::to_string(compose_pass) +
              "/10 seeds at the 1% level";
  return g;
}

// ---------------------------------------------------------------------------
// criterion 8: random-weight filter means track the exact linear-Gaussian
// recursion on the mean-reverting model
// ---------------------------------------------------------------------------

Gate criterion8() {
  Gate g;
  const auto start = std::chrono::steady_clock::now();
  const Dataset ds = simulate_ou_dataset(0.5, 0.5, 1.0, 50, 17);
  const std::vector<KalmanMoments> exact =
      kalman_filter_ou(0.5, 0.5, 0.0, 1.0, ds.observations);

  const std::size_t reps = 100;
  const std::size_t T = ds.observations.size();
  std::vector<std::vector<double>> means(T);
  for (std::size_t r = 0; r < reps; ++r) {
    const FilterRunSummary run = run_benchmark_filter(
        ds, FilterKind::rw_gpe2, 1000, 1.0, 0.1, 100 + r);
    if (run.times.size() != T) {
      g.require(false, "replicate " + std::to_string(r) + " reported " +
                           std::to_string(run.times.size()) + " steps");
      return g;
    }
    for (std::size_t t = 0; t < T; ++t) means[t].push_back(run.means[t]);
  }
  double worst_z = 0.0;
  std::size_t worst_t = 0;
  for (std::size_t t = 0; t < T; ++t) {
    RunningMoments acc;
    for (double v : means[t]) acc.add(v);
    const double z = std::fabs(acc.mean - exact[t].mean) / acc.se_mean();
    if (z > worst_z) {
      worst_z = z;
      worst_t = t;
    }
    g.require(z <= 3.0, "step " + std::to_string(t + 1) + ": filter mean " +
                            fmt(acc.mean) + " vs exact " + fmt(exact[t].mean) +
                            " is " + fmt(z) + " SEs away");
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  g.require(secs <= 600.0, "runtime " + fmt(secs) + " s exceeds 600 s");
  g.summary = "all 50 posterior means within 3 SE of the exact recursion "
              "(worst z = " + fmt(worst_z) + " at step " +
              std::to_string(worst_t + 1) + ", " + fmt(secs) + " s)";
  return g;
}

// ---------------------------------------------------------------------------
// criteria 9-11 run on one fixed signal dataset
// ---------------------------------------------------------------------------

Dataset fixed_sine_dataset() {
  return simulate_sine_dataset(100.0, 1.0, 0.2, 43);
}

Gate criterion9() {
  Gate g;
  const Dataset ds = fixed_sine_dataset();
  CltConfig cfg;
  cfg.kind = FilterKind::rw_gpe2;
  cfg.n_grid = {250, 500, 1000, 2000, 4000};
  cfg.replicates = 100;
  cfg.reference_n = 32000;
  cfg.reference_runs = 8;
  cfg.batches = 30;
  cfg.seed = 3;
  const CltResult res = clt_rate_check(ds, cfg);
  g.require(res.slope >= -0.6 && res.slope <= -0.4,
            "slope " + fmt(res.slope) + " outside [-0.6, -0.4]");
  g.require(res.ci_lo <= -0.5 && -0.5 <= res.ci_hi,
            "95% CI [" + fmt(res.ci_lo) + ", " + fmt(res.ci_hi) +
                "] does not cover -0.5");
  g.summary = "error-vs-N slope " + fmt(res.slope) + ", 95% CI [" +
              fmt(res.ci_lo) + ", " + fmt(res.ci_hi) + "] covers -0.5";
  return g;
}

Gate criterion10() {
  Gate g;
  const Dataset ds = fixed_sine_dataset();
  // All six filters at the stock CPU-matched particle counts
  // (500/500/910/1000/1000/1000, chosen to roughly equalise per-replicate
  // cost). Wall-clock recalibration is off so every report row stays
  // bit-reproducible from (config, seed).
  FilterBenchConfig cfg;
  cfg.replicates = 100;
  cfg.calibrate_cpu = false;
  cfg.seed = 1;
  const BenchmarkReport rep = bench_filters(ds, cfg);
  const auto rel = [&](FilterKind k) {
    return rep.find(filter_kind_name(k), "relative_efficiency").value;
  };
  const double r_gpe2 = rel(FilterKind::rw_gpe2);
  const double r_pe = rel(FilterKind::rw_poisson);
  const double r_adapted = rel(FilterKind::exact_adapted);
  const double r_bootstrap = rel(FilterKind::exact_bootstrap);
  g.require(r_gpe2 >= r_pe, "rw-gpe2 " + fmt(r_gpe2) + " < rw-pe " + fmt(r_pe));
  g.require(r_pe >= r_adapted,
            "rw-pe " + fmt(r_pe) + " < adapted-exact " + fmt(r_adapted));
  g.require(r_adapted >= r_bootstrap, "adapted-exact " + fmt(r_adapted) +
                                          " < bootstrap-exact " +
                                          fmt(r_bootstrap));
  g.summary = "relative efficiency " + fmt(r_gpe2) + " >= " + fmt(r_pe) +
              " >= " + fmt(r_adapted) + " >= " + fmt(r_bootstrap) +
              " (rw-gpe2, rw-pe, adapted-exact, bootstrap-exact)";
  return g;
}

Dataset subsample(const Dataset& ds, std::size_t every) {
  Dataset out = ds;
  out.observations.clear();
  for (std::size_t i = 0; i < ds.observations.size(); ++i) {
    if ((i + 1) % every == 0) out.observations.push_back(ds.observations[i]);
  }
  out.params["delta"] = ds.params.at("delta") * static_cast<double>(every);
  return out;
}

Gate criterion11() {
  Gate g;
  const Dataset ds = fixed_sine_dataset();
  const auto ess_pair = [&](const Dataset& sub) {
    FilterBenchConfig cfg;
    cfg.filters = {FilterKind::rw_gpe2, FilterKind::rw_gpe2_pseudo};
    cfg.replicates = 100;
    cfg.calibrate_cpu = false;  // equal particle counts, N = 1000 each
    cfg.pseudo_delta_max = 1.0;
    cfg.seed = 1;
    const BenchmarkReport rep = bench_filters(sub, cfg);
    return std::pair<double, double>(
        rep.find("rw-gpe2", "ess_by_variance").value,
        rep.find("rw-gpe2-pseudo", "ess_by_variance").value);
  };
  const auto [plain10, pseudo10] = ess_pair(subsample(ds, 10));
  const auto [plain20, pseudo20] = ess_pair(subsample(ds, 20));
  g.require(pseudo10 >= 5.0 * plain10,
            "gap 10: pseudo-refreshed ESS " + fmt(pseudo10) + " < 5 x " +
                fmt(plain10));
  g.require(pseudo20 >= 5.0 * plain20,
            "gap 20: pseudo-refreshed ESS " + fmt(pseudo20) + " < 5 x " +
                fmt(plain20));
  g.require(plain20 < plain10, "plain ESS did not degrade with the gap: " +
                                   fmt(plain20) + " >= " + fmt(plain10));
  g.summary = "ESS gap 10: " + fmt(pseudo10) + " vs " + fmt(plain10) +
              " (x" + fmt(pseudo10 / plain10) + "); gap 20: " + fmt(pseudo20) +
              " vs " + fmt(plain20) + " (x" + fmt(pseudo20 / plain20) + ")";
  return g;
}

// ---------------------------------------------------------------------------
// criterion 12: event-stream filtering completes and brackets the latent path
// ---------------------------------------------------------------------------

Gate criterion12() {
  Gate g;
  long covered = 0;
  long total = 0;
  double min_final_ess = 1e300;
  for (int i = 0; i < 20; ++i) {
    const Dataset ds =
        simulate_cox_dataset(0.0, 20.0, 0.5, 10.0, 1e-3, 211 + i);
    FilterRunSummary run;
    try {
      run = run_benchmark_filter(ds, FilterKind::rw_gpe2, 1000, 0.1, 0.1,
                                 300 + i);
    } catch (const std::exception& e) {
      g.require(false, "dataset " + std::to_string(211 + i) +
                           " did not complete: " + e.what());
      continue;
    }
    if (run.ess_weights.empty()) {
      g.require(false, "dataset " + std::to_string(211 + i) +
                           " produced no event steps");
      continue;
    }
    min_final_ess = std::min(min_final_ess, run.ess_weights.back());
    g.require(run.ess_weights.back() > 1.0,
              "dataset " + std::to_string(211 + i) + " final weight ESS " +
                  fmt(run.ess_weights.back()) + " <= 1");
    for (std::size_t t = 0; t < run.times.size(); ++t) {
      const double truth = std::fabs(latent_at(ds, run.times[t]));
      ++total;
      if (run.q05_abs[t] <= truth && truth <= run.q95_abs[t]) ++covered;
    }
  }
  const double frac =
      total > 0 ? static_cast<double>(covered) / static_cast<double>(total)
                : 0.0;
  g.require(frac >= 0.80, "90% intervals covered |X| at only " +
                              fmt(100.0 * frac) + "% of event times");
  g.summary = "20 event datasets completed; |X| coverage " +
              fmt(100.0 * frac) + "% of " + std::to_string(total) +
              " event times, min final ESS " + fmt(min_final_ess);
  return g;
}

// ---------------------------------------------------------------------------
// criterion 13: layer index and within-layer marginal match classified
// fine-grid bridge paths
// ---------------------------------------------------------------------------

Gate criterion13() {
  Gate g;
  const BridgeSpec spec{0.0, 0.0, 0.0, 1.0};
  const double a = 1.0;
  const int n_steps = 1000;
  const int n_bins = 20;

  // Oracle: classify 1e6 gridded bridge paths (with between-grid excursion
  // correction) into layer cells {1, 2, 3, >=4}, and histogram the midpoint
  // value of the paths confined to the first layer. The oracle is shared by
  // all ten seeds, so its own noise is kept well below one per-seed SE.
  std::vector<double> layer_o(4, 0.0);
  std::vector<double> mid_o(n_bins, 0.0);
  {
    RngStream rng(derive_seed(13, 60, 0, 0));
    std::vector<double> w;
    for (int p = 0; p < 1000000; ++p) {
      teststat::simulate_bridge_grid(spec, n_steps, w, rng);
      const int j = teststat::classify_layer(spec, w, a, rng);
      layer_o[static_cast<std::size_t>(std::min(j, 4) - 1)] += 1.0;
      if (j == 1) {
        const double v = w[n_steps / 2];
        const int bin = std::clamp(
            static_cast<int>((v + a) / (2.0 * a) * n_bins), 0, n_bins - 1);
        mid_o[static_cast<std::size_t>(bin)] += 1.0;
      }
    }
  }

  int layer_pass = 0;
  int mid_pass = 0;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    std::vector<double> layer_s(4, 0.0);
    std::vector<double> mid_s(n_bins, 0.0);
    RngStream rng(derive_seed(13, 61, s, 0));
    for (int d = 0; d < 100000; ++d) {
      LayeredBridge lb = LayeredBridge::sample_layer(spec, a, rng);
      const int j = lb.layer();
      layer_s[static_cast<std::size_t>(std::min(j, 4) - 1)] += 1.0;
      if (j == 1) {
        const double v = lb.point(0.5, rng);
        const int bin = std::clamp(
            static_cast<int>((v + a) / (2.0 * a) * n_bins), 0, n_bins - 1);
        mid_s[static_cast<std::size_t>(bin)] += 1.0;
      }
    }
    if (teststat::chi2_homogeneity_pvalue(layer_o, layer_s) > 0.01)
      ++layer_pass;
    if (teststat::chi2_homogeneity_pvalue(mid_o, mid_s) > 0.01) ++mid_pass;
  }
  g.require(layer_pass >= 9, "layer-index chi-square passed only " +
                                 std::to_string(layer_pass) + "/10 seeds");
  g.require(mid_pass >= 9, "within-layer midpoint chi-square passed only " +
                               std::to_string(mid_pass) + "/10 seeds");
  g.summary = "layer distribution " + std::to_string(layer_pass) +
              "/10, first-layer midpoint marginal " + std::to_string(mid_pass) +
              "/10 seeds at the 1% level";
  return g;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        const int k = std::atoi(tok.c_str());
        if (k < 1 || k > 13) {
          std::cerr << "unknown criterion '" << tok << "' (expect 1..13)\n";
          return 2;
        }
        selected.push_back(k);
      }
    } else {
      std::cerr << "usage: " << argv[0] << " [--criterion K[,K...]] ...\n";
      return 2;
    }
  }
  if (selected.empty()) {
    for (int k = 1; k <= 13; ++k) selected.push_back(k);
  }

  using Fn = Gate (*)();
  const Fn criteria[13] = {criterion1, criterion2,  criterion3,  criterion4,
                           criterion5, criterion6,  criterion7,  criterion8,
                           criterion9, criterion10, criterion11, criterion12,
                           criterion13};
  bool all_pass = true;
  for (int k : selected) {
    Gate g;
    try {
      g = criteria[k - 1]();
    } catch (const std::exception& e) {
      g.pass = false;
      g.problems = {std::string("unhandled exception: ") + e.what()};
    }
    all_pass = all_pass && g.pass;
    std::cout << "criterion " << k << ": " << (g.pass ? "PASS" : "FAIL")
              << " - " << g.detail() << std::endl;
  }
  return all_pass ? 0 : 1;
}
