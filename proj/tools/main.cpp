// Command-line front end: dataset simulation, single-expectation estimation,
// filter runs with trace output, and the benchmark / convergence harnesses.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rwpf/bench.hpp"
#include "rwpf/kalman.hpp"

namespace {

using namespace rwpf;

struct CommonOpts {
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOpts& c, bool format_used = true) {
  cmd->set_config("--config", "", "read options from an INI file");
  cmd->add_option("--seed", c.seed, "master RNG seed")->required();
  cmd->add_option("--out", c.out, "output path (default: stdout)");
  auto* fmt = cmd->add_option("--format", c.format, "output format")
                  ->check(CLI::IsMember({"csv", "json"}));
  if (!format_used)
    fmt->description("accepted for uniformity; this command's format is fixed");
}

template <typename WriteCsv, typename WriteJson>
void emit(const CommonOpts& c, WriteCsv&& write_csv, WriteJson&& write_json) {
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!c.out.empty()) {
    file.open(c.out);
    if (!file) throw std::runtime_error("cannot open output file: " + c.out);
    os = &file;
  }
  if (c.format == "json")
    write_json(*os);
  else
    write_csv(*os);
}

void emit_report(const BenchmarkReport& report, const CommonOpts& c) {
  emit(
      c, [&](std::ostream& os) { write_report_csv(report, os); },
      [&](std::ostream& os) { write_report_json(report, os); });
}

void emit_trace(const std::vector<StepRecord>& trace, const CommonOpts& c) {
  emit(
      c, [&](std::ostream& os) { write_trace_csv(trace, os); },
      [&](std::ostream& os) { write_trace_json(trace, os); });
}

DiffusionModel model_by_name(const std::string& name, double rho, double a,
                             double beta) {
  if (name == "sine") return make_sine_model();
  if (name == "ou") return make_ou_model(rho);
  if (name == "ou_cox") return make_ou_model(rho, a, beta);
  throw std::runtime_error("unknown model: " + name);
}

EstimatorKind estimator_by_name(const std::string& name) {
  if (name == "pe") return EstimatorKind::poisson;
  if (name == "gpe1") return EstimatorKind::gpe1;
  if (name == "gpe2") return EstimatorKind::gpe2;
  if (name == "dg" || name == "discretised") return EstimatorKind::discretised;
  throw std::runtime_error("unknown estimator: " + name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"random-weight particle filtering for diffusion signals"};
  app.require_subcommand(1);

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "simulate a dataset to files");
  CommonOpts sim_c;
  std::string sim_model = "sine";
  double sim_t_end = 10.0;
  std::optional<double> sim_delta;
  std::optional<double> sim_sigma;
  double sim_rho = 0.5;
  double sim_a = 0.0;
  double sim_beta = 20.0;
  double sim_grid_dt = 1e-3;
  std::size_t sim_n_obs = 50;
  add_common(sim, sim_c, /*format_used=*/false);
  sim->add_option("--model", sim_model, "sine | ou | ou_cox")
      ->check(CLI::IsMember({"sine", "ou", "ou_cox"}));
  sim->add_option("--t-end", sim_t_end, "path length (sine, ou_cox)");
  sim->add_option("--delta", sim_delta,
                  "observation spacing (default 0.5 sine, 1.0 ou)");
  sim->add_option("--sigma", sim_sigma,
                  "observation noise sd (default 0.2 sine, 0.5 ou)");
  sim->add_option("--rho", sim_rho, "mean-reversion rate (ou, ou_cox)");
  sim->add_option("--a", sim_a, "intensity offset (ou_cox)");
  sim->add_option("--beta", sim_beta, "intensity slope (ou_cox)");
  sim->add_option("--grid-dt", sim_grid_dt, "latent grid spacing (ou_cox)");
  sim->add_option("--n-obs", sim_n_obs, "number of observations (ou)");
  sim->callback([&] {
    if (sim_c.out.empty())
      throw CLI::ValidationError("simulate", "--out is required");
    Dataset ds;
    if (sim_model == "sine") {
      ds = simulate_sine_dataset(sim_t_end, sim_delta.value_or(0.5),
                                 sim_sigma.value_or(0.2), sim_c.seed);
    } else if (sim_model == "ou") {
      ds = simulate_ou_dataset(sim_rho, sim_sigma.value_or(0.5),
                               sim_delta.value_or(1.0), sim_n_obs, sim_c.seed);
    } else {
      ds = simulate_cox_dataset(sim_a, sim_beta, sim_rho, sim_t_end,
                                sim_grid_dt, sim_c.seed);
    }
    write_dataset(ds, sim_c.out);
    std::cerr << "wrote " << ds.observations.size() << " records to "
              << sim_c.out << " (+ .truth)\n";
  });

  // ---- estimate ----
  auto* est = app.add_subcommand(
      "estimate", "estimate one bridge expectation or transition density");
  CommonOpts est_c;
  std::string est_model = "sine";
  std::string est_kind = "gpe2";
  std::string est_quantity = "weight";
  double est_x0 = 0.0;
  double est_xt = 0.0;
  double est_t = 1.0;
  double est_rho = 0.5;
  double est_a = 0.0;
  double est_beta = 20.0;
  std::size_t est_draws = 10000;
  bool est_include_nu = false;
  bool est_global = false;
  std::optional<double> est_cc;
  std::optional<double> est_lambda;
  double est_dispersion = 10.0;
  int est_grid_points = 1;
  double est_grid_spacing = 0.0;
  double est_layer_width = 0.75;
  add_common(est, est_c);
  est->add_option("--model", est_model, "sine | ou | ou_cox")
      ->check(CLI::IsMember({"sine", "ou", "ou_cox"}));
  est->add_option("--estimator", est_kind, "pe | gpe1 | gpe2 | discretised")
      ->check(CLI::IsMember({"pe", "gpe1", "gpe2", "discretised", "dg"}));
  est->add_option("--quantity", est_quantity,
                  "weight: E[exp(-integral g)]; transition: density value")
      ->check(CLI::IsMember({"weight", "transition"}));
  est->add_option("--x0", est_x0, "left endpoint")->required();
  est->add_option("--xt", est_xt, "right endpoint")->required();
  est->add_option("--t", est_t, "interval length");
  est->add_option("--rho", est_rho, "mean-reversion rate (ou, ou_cox)");
  est->add_option("--a", est_a, "intensity offset (ou_cox)");
  est->add_option("--beta", est_beta, "intensity slope (ou_cox)");
  est->add_option("--draws", est_draws, "number of estimator draws");
  est->add_flag("--include-nu", est_include_nu,
                "integrate the event intensity as well (g = phi + nu)");
  est->add_flag("--global-bounds", est_global,
                "use the model's global bounds instead of layer sampling");
  est->add_option("--c", est_cc, "tilt centre for the signed estimator");
  est->add_option("--lambda", est_lambda, "count rate for the signed estimator");
  est->add_option("--dispersion", est_dispersion,
                  "negative-binomial dispersion (gpe2)");
  est->add_option("--grid-points", est_grid_points,
                  "interior grid points (discretised)");
  est->add_option("--grid-spacing", est_grid_spacing,
                  "grid spacing, overrides --grid-points when > 0");
  est->add_option("--layer-width", est_layer_width,
                  "layer width as a multiple of sqrt(duration)");
  est->callback([&] {
    const DiffusionModel model =
        model_by_name(est_model, est_rho, est_a, est_beta);
    EstimatorConfig cfg;
    cfg.kind = estimator_by_name(est_kind);
    cfg.c = est_cc;
    cfg.lambda = est_lambda;
    cfg.dispersion = est_dispersion;
    cfg.grid_points = est_grid_points;
    cfg.grid_spacing = est_grid_spacing;
    cfg.use_global_bounds = est_global;
    cfg.layer_width_factor = est_layer_width;
    const BridgeSpec spec{est_x0, est_xt, 0.0, est_t};
    RngStream rng(derive_seed(est_c.seed, 50, 0, 0));
    std::vector<Estimate> draws;
    draws.reserve(est_draws);
    if (est_quantity == "transition") {
      if (est_include_nu)
        throw CLI::ValidationError("estimate",
                                   "--include-nu applies to --quantity weight");
      for (std::size_t d = 0; d < est_draws; ++d)
        draws.push_back(
            transition_density_estimate(model, est_x0, est_xt, est_t, cfg, rng));
    } else {
      const PathFunction g = [&](double u) {
        double v = eval_phi(model, u);
        if (est_include_nu) v += model.cox_intensity(u);
        return v;
      };
      for (std::size_t d = 0; d < est_draws; ++d) {
        switch (cfg.kind) {
          case EstimatorKind::poisson: {
            double centre;
            if (est_cc)
              centre = *est_cc;
            else if (!est_include_nu && model.phi_global_bounds)
              centre = model.phi_global_bounds->hi;
            else
              throw CLI::ValidationError("estimate",
                                         "--c is required for this model");
            draws.push_back(poisson_estimator(g, spec, centre,
                                              est_lambda.value_or(centre), rng));
            break;
          }
          case EstimatorKind::gpe1:
          case EstimatorKind::gpe2: {
            LayeredBridge bridge =
                prepare_bridge(model, est_include_nu, spec, cfg, rng);
            if (cfg.kind == EstimatorKind::gpe1) {
              draws.push_back(gpe1(g, bridge, rng));
            } else {
              const double chord = chord_g_integral(model, est_include_nu,
                                                    est_x0, est_xt, est_t);
              draws.push_back(gpe2(g, bridge, est_dispersion, rng, chord));
            }
            break;
          }
          case EstimatorKind::discretised: {
            int m = est_grid_points;
            if (est_grid_spacing > 0.0)
              m = std::max(
                  0, static_cast<int>(std::ceil(est_t / est_grid_spacing)) - 1);
            draws.push_back(discretised_weight(g, spec, m, rng));
            break;
          }
        }
      }
    }
    const EstimatorDiagnostics diag = estimator_diagnostics(draws);
    std::size_t negatives = 0;
    for (const Estimate& e : draws) negatives += e.negative ? 1 : 0;
    BenchmarkReport report;
    report.metadata["model"] = est_model;
    report.metadata["quantity"] = est_quantity;
    report.metadata["x0"] = format_double(est_x0);
    report.metadata["xt"] = format_double(est_xt);
    report.metadata["t"] = format_double(est_t);
    report.metadata["seed"] = std::to_string(est_c.seed);
    const std::string conf = est_kind;
    report.add(conf, "mean", diag.sample_mean,
               std::sqrt(diag.sample_variance / static_cast<double>(diag.n)),
               diag.n);
    report.add(conf, "variance", diag.sample_variance, 0.0, diag.n);
    report.add(conf, "mean_kappa", diag.mean_kappa, 0.0, diag.n);
    report.add(conf, "negative_share",
               static_cast<double>(negatives) / static_cast<double>(diag.n),
               0.0, diag.n);
    emit_report(report, est_c);
  });

  // ---- filter ----
  auto* fil = app.add_subcommand("filter", "run one filter and emit its trace");
  CommonOpts fil_c;
  std::string fil_data;
  std::string fil_kind = "rw-gpe2";
  std::size_t fil_particles = 0;
  std::optional<double> fil_delta_max;
  double fil_spacing = 0.1;
  std::optional<double> fil_threshold;
  std::optional<std::string> fil_proposal;
  std::optional<std::string> fil_resample;
  add_common(fil, fil_c);
  fil->add_option("--data", fil_data, "dataset file")->required();
  fil->add_option("--filter", fil_kind,
                  "bootstrap-exact | adapted-exact | rw-pe | rw-gpe2 | "
                  "discretised | rw-gpe2-pseudo")
      ->check(CLI::IsMember({"bootstrap-exact", "adapted-exact", "rw-pe",
                             "rw-gpe2", "discretised", "rw-gpe2-pseudo"}));
  fil->add_option("--particles", fil_particles,
                  "particle count (default per filter)");
  fil->add_option("--delta-max", fil_delta_max,
                  "maximum gap before pseudo times are inserted");
  fil->add_option("--spacing", fil_spacing, "grid spacing (discretised)");
  fil->add_option("--threshold", fil_threshold,
                  "resample when the selection ESS drops below this");
  fil->add_option("--proposal", fil_proposal, "prior | ozaki")
      ->check(CLI::IsMember({"prior", "ozaki"}));
  fil->add_option("--resample", fil_resample,
                  "multinomial | stratified | residual")
      ->check(CLI::IsMember({"multinomial", "stratified", "residual"}));
  fil->callback([&] {
    const Dataset ds = read_dataset(fil_data);
    const FilterKind kind = filter_kind_from_name(fil_kind);
    const std::size_t n =
        fil_particles > 0 ? fil_particles : default_particle_count(kind);
    const double delta_max = fil_delta_max.value_or(
        ds.regime == Regime::point_process ? 0.1 : 1.0);
    if (kind == FilterKind::exact_bootstrap ||
        kind == FilterKind::exact_adapted) {
      const FilterRunSummary s = run_benchmark_filter(
          ds, kind, n, delta_max, fil_spacing, fil_c.seed);
      std::vector<StepRecord> trace(s.times.size());
      for (std::size_t i = 0; i < s.times.size(); ++i) {
        trace[i].time = s.times[i];
        trace[i].ess_weights = s.ess_weights[i];
        trace[i].ess_betas = s.ess_weights[i];
        trace[i].resampled = true;
        trace[i].mean = s.means[i];
        trace[i].variance = s.variances[i];
        trace[i].q05 = s.q05[i];
        trace[i].q95 = s.q95[i];
        trace[i].mean_abs = s.mean_abs[i];
        trace[i].q05_abs = s.q05_abs[i];
        trace[i].q95_abs = s.q95_abs[i];
      }
      emit_trace(trace, fil_c);
      return;
    }
    FilterConfig fc =
        benchmark_filter_config(ds, kind, n, delta_max, fil_spacing);
    if (fil_delta_max) fc.delta_max = *fil_delta_max;
    if (fil_threshold) fc.resample_threshold = *fil_threshold;
    if (fil_proposal)
      fc.proposal = *fil_proposal == "prior" ? ProposalKind::prior
                                             : ProposalKind::ozaki;
    if (fil_resample) {
      if (*fil_resample == "multinomial")
        fc.scheme = ResampleScheme::multinomial;
      else if (*fil_resample == "residual")
        fc.scheme = ResampleScheme::residual;
      else
        fc.scheme = ResampleScheme::stratified;
    }
    const DiffusionModel model = model_for_dataset(ds);
    const FilterResult res = run_filter(model, ds.observations, fc, 0.0,
                                        benchmark_prior_sd(ds), fil_c.seed);
    emit_trace(res.trace, fil_c);
  });

  // ---- bench-estimators ----
  auto* be = app.add_subcommand("bench-estimators",
                                "compare estimator variance, counts and CVs");
  CommonOpts be_c;
  EstimatorBenchConfig be_cfg;
  add_common(be, be_c);
  be->add_option("--draws", be_cfg.draws, "draws per estimator");
  be->add_option("--reference-draws", be_cfg.reference_draws,
                 "draws for the CV reference mean");
  be->add_option("--oracle-paths", be_cfg.oracle_paths,
                 "fine-grid paths for the brute-force mean");
  be->add_option("--oracle-steps", be_cfg.oracle_steps,
                 "fine-grid steps per path");
  be->add_option("--dispersion", be_cfg.dispersion,
                 "negative-binomial dispersion (gpe2)");
  be->add_option("--layer-width", be_cfg.layer_width_factor,
                 "layer width as a multiple of sqrt(duration)");
  be->add_option("--batches", be_cfg.batches, "batches for standard errors");
  be->callback([&] {
    be_cfg.seed = be_c.seed;
    emit_report(bench_estimators(be_cfg), be_c);
  });

  // ---- bench-filters ----
  auto* bf = app.add_subcommand(
      "bench-filters", "replicate filters on one dataset and compare spread");
  CommonOpts bf_c;
  std::string bf_data;
  std::vector<std::string> bf_filters;
  FilterBenchConfig bf_cfg;
  std::vector<std::size_t> bf_particles;
  add_common(bf, bf_c);
  bf->add_option("--data", bf_data, "dataset file")->required();
  bf->add_option("--filters", bf_filters, "comma-separated filter names")
      ->delimiter(',');
  bf->add_option("--replicates", bf_cfg.replicates, "replicate runs per filter");
  bf->add_option("--particles", bf_particles,
                 "comma-separated particle counts, one per filter")
      ->delimiter(',');
  bf->add_flag("--calibrate-cpu", bf_cfg.calibrate_cpu,
               "rescale particle counts to equalise measured run time");
  bf->add_option("--delta-max", bf_cfg.pseudo_delta_max,
                 "maximum gap before pseudo times are inserted");
  bf->add_option("--spacing", bf_cfg.discretised_spacing,
                 "grid spacing (discretised)");
  bf->add_option("--batches", bf_cfg.batches, "batches for standard errors");
  bf->callback([&] {
    const Dataset ds = read_dataset(bf_data);
    if (!bf_filters.empty()) {
      bf_cfg.filters.clear();
      for (const std::string& name : bf_filters)
        bf_cfg.filters.push_back(filter_kind_from_name(name));
    }
    bf_cfg.particle_counts = bf_particles;
    bf_cfg.seed = bf_c.seed;
    emit_report(bench_filters(ds, bf_cfg), bf_c);
  });

  // ---- clt-check ----
  auto* clt = app.add_subcommand(
      "clt-check", "regress replicate RMSE against particle count");
  CommonOpts clt_c;
  std::string clt_data;
  std::string clt_kind = "rw-gpe2";
  CltConfig clt_cfg;
  add_common(clt, clt_c);
  clt->add_option("--data", clt_data, "dataset file")->required();
  clt->add_option("--filter", clt_kind, "filter to check");
  clt->add_option("--n-grid", clt_cfg.n_grid, "comma-separated particle counts")
      ->delimiter(',');
  clt->add_option("--replicates", clt_cfg.replicates, "replicates per count");
  clt->add_option("--reference-n", clt_cfg.reference_n,
                  "particle count of the reference run");
  clt->add_option("--batches", clt_cfg.batches, "batches for the slope CI");
  clt->add_option("--delta-max", clt_cfg.pseudo_delta_max,
                  "maximum gap before pseudo times are inserted");
  clt->add_option("--spacing", clt_cfg.discretised_spacing,
                  "grid spacing (discretised)");
  clt->callback([&] {
    const Dataset ds = read_dataset(clt_data);
    clt_cfg.kind = filter_kind_from_name(clt_kind);
    clt_cfg.seed = clt_c.seed;
    const CltResult result = clt_rate_check(ds, clt_cfg);
    emit_report(result.report, clt_c);
    std::cerr << "slope " << format_double(result.slope) << " ci ["
              << format_double(result.ci_lo) << ", "
              << format_double(result.ci_hi) << "]\n";
  });

  try {
    CLI11_PARSE(app, argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
