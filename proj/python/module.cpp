// Python bindings for the core operations: dataset simulation and IO,
// estimator draws, filter runs, and the linear-Gaussian reference filter.
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rwpf/bench.hpp"
#include "rwpf/exact.hpp"
#include "rwpf/kalman.hpp"

namespace py = pybind11;
using namespace rwpf;

namespace {

DiffusionModel model_by_name(const std::string& name, double rho, double a,
                             double beta) {
  if (name == "sine") return make_sine_model();
  if (name == "ou") return make_ou_model(rho);
  if (name == "ou_cox") return make_ou_model(rho, a, beta);
  throw std::invalid_argument("unknown model: " + name);
}

py::dict summary_to_dict(const FilterRunSummary& s) {
  py::dict d;
  d["time"] = s.times;
  d["mean"] = s.means;
  d["variance"] = s.variances;
  d["ess_weights"] = s.ess_weights;
  d["q05"] = s.q05;
  d["q95"] = s.q95;
  d["mean_abs"] = s.mean_abs;
  d["q05_abs"] = s.q05_abs;
  d["q95_abs"] = s.q95_abs;
  d["total_clamps"] = s.total_clamps;
  d["seconds"] = s.seconds;
  return d;
}

py::list report_to_rows(const BenchmarkReport& report) {
  py::list rows;
  for (const ReportRow& r : report.rows) {
    py::dict d;
    d["configuration"] = r.configuration;
    d["statistic"] = r.statistic;
    d["value"] = r.value;
    d["standard_error"] = r.standard_error;
    d["n"] = r.n;
    rows.append(d);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "random-weight particle filtering for diffusion signals";

  py::enum_<Regime>(m, "Regime")
      .value("noisy", Regime::noisy)
      .value("constrained", Regime::constrained)
      .value("point_process", Regime::point_process);

  py::class_<Observation>(m, "Observation")
      .def(py::init<>())
      .def_readwrite("time", &Observation::time)
      .def_readwrite("regime", &Observation::regime)
      .def_readwrite("value", &Observation::value)
      .def_readwrite("is_pseudo", &Observation::is_pseudo)
      .def("__repr__", [](const Observation& o) {
        return "Observation(time=" + format_double(o.time) + ")";
      });

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<>())
      .def_readwrite("regime", &Dataset::regime)
      .def_readwrite("model", &Dataset::model)
      .def_readwrite("seed", &Dataset::seed)
      .def_readwrite("params", &Dataset::params)
      .def_readwrite("observations", &Dataset::observations)
      .def_readwrite("latent", &Dataset::latent);

  m.def("simulate_sine_dataset", &simulate_sine_dataset, py::arg("t_end"),
        py::arg("delta"), py::arg("sigma"), py::arg("seed"));
  m.def("simulate_cox_dataset", &simulate_cox_dataset, py::arg("a"),
        py::arg("beta"), py::arg("rho"), py::arg("t_end"), py::arg("grid_dt"),
        py::arg("seed"));
  m.def("simulate_ou_dataset", &simulate_ou_dataset, py::arg("rho"),
        py::arg("sigma"), py::arg("delta"), py::arg("n_obs"), py::arg("seed"));
  m.def("write_dataset", &write_dataset, py::arg("dataset"), py::arg("path"));
  m.def("read_dataset", &read_dataset, py::arg("path"));
  m.def("latent_at", &latent_at, py::arg("dataset"), py::arg("time"));

  m.def(
      "phi",
      [](const std::string& model, double u, double rho, double a,
         double beta) { return eval_phi(model_by_name(model, rho, a, beta), u); },
      py::arg("model"), py::arg("u"), py::arg("rho") = 0.5, py::arg("a") = 0.0,
      py::arg("beta") = 20.0,
      "potential-derived integrand phi at a state value");

  m.def(
      "transition_density",
      [](const std::string& model, double x0, double xt, double t,
         const std::string& estimator, std::size_t draws, std::uint64_t seed,
         double rho, double dispersion, bool use_global_bounds) {
        const DiffusionModel mod = model_by_name(model, rho, 0.0, 0.0);
        EstimatorConfig cfg;
        cfg.kind = estimator == "pe"     ? EstimatorKind::poisson
                   : estimator == "gpe1" ? EstimatorKind::gpe1
                   : estimator == "gpe2"
                       ? EstimatorKind::gpe2
                       : throw std::invalid_argument("unknown estimator");
        cfg.dispersion = dispersion;
        cfg.use_global_bounds = use_global_bounds;
        RngStream rng(derive_seed(seed, 50, 0, 0));
        double sum = 0.0;
        double sum_sq = 0.0;
        for (std::size_t d = 0; d < draws; ++d) {
          const Estimate e =
              transition_density_estimate(mod, x0, xt, t, cfg, rng);
          sum += e.value;
          sum_sq += e.value * e.value;
        }
        const double mean = sum / static_cast<double>(draws);
        const double var =
            draws > 1 ? (sum_sq - sum * mean) / static_cast<double>(draws - 1)
                      : 0.0;
        py::dict out;
        out["mean"] = mean;
        out["standard_error"] = std::sqrt(std::max(0.0, var) /
                                          static_cast<double>(draws));
        out["draws"] = draws;
        return out;
      },
      py::arg("model"), py::arg("x0"), py::arg("xt"), py::arg("t"),
      py::arg("estimator") = "gpe2", py::arg("draws") = 1000,
      py::arg("seed") = 1, py::arg("rho") = 0.5, py::arg("dispersion") = 10.0,
      py::arg("use_global_bounds") = true,
      "Monte Carlo mean of unbiased transition-density draws");

  m.def(
      "exact_propagate",
      [](const std::string& model, double x0, double delta, std::uint64_t seed,
         std::size_t draws) {
        const DiffusionModel mod = model_by_name(model, 0.5, 0.0, 0.0);
        RngStream rng(derive_seed(seed, 51, 0, 0));
        std::vector<double> out(draws);
        for (std::size_t d = 0; d < draws; ++d)
          out[d] = exact_propagate(mod, x0, delta, rng);
        return out;
      },
      py::arg("model"), py::arg("x0"), py::arg("delta"), py::arg("seed") = 1,
      py::arg("draws") = 1,
      "draws from the exact transition law by rejection sampling");

  m.def(
      "run_filter",
      [](const Dataset& ds, const std::string& filter, std::size_t particles,
         double delta_max, double spacing, std::uint64_t seed) {
        const FilterKind kind = filter_kind_from_name(filter);
        const std::size_t n =
            particles > 0 ? particles : default_particle_count(kind);
        return summary_to_dict(
            run_benchmark_filter(ds, kind, n, delta_max, spacing, seed));
      },
      py::arg("dataset"), py::arg("filter") = "rw-gpe2",
      py::arg("particles") = 0, py::arg("delta_max") = 1.0,
      py::arg("spacing") = 0.1, py::arg("seed") = 1,
      "one filter run summarised at the true observation times");

  m.def(
      "kalman_filter_ou",
      [](double rho, double sigma, const std::vector<Observation>& obs,
         double prior_mean, double prior_var, double start_time) {
        std::vector<std::pair<double, double>> out;
        for (const KalmanMoments& km :
             kalman_filter_ou(rho, sigma, prior_mean, prior_var, obs,
                              start_time))
          out.emplace_back(km.mean, km.variance);
        return out;
      },
      py::arg("rho"), py::arg("sigma"), py::arg("observations"),
      py::arg("prior_mean") = 0.0, py::arg("prior_var") = 1.0,
      py::arg("start_time") = 0.0,
      "exact linear-Gaussian filtering moments per observation");

  m.def(
      "bench_estimators",
      [](std::size_t draws, std::size_t reference_draws,
         std::size_t oracle_paths, int oracle_steps, std::uint64_t seed) {
        EstimatorBenchConfig cfg;
        cfg.draws = draws;
        cfg.reference_draws = reference_draws;
        cfg.oracle_paths = oracle_paths;
        cfg.oracle_steps = oracle_steps;
        cfg.seed = seed;
        return report_to_rows(bench_estimators(cfg));
      },
      py::arg("draws") = 10000, py::arg("reference_draws") = 100000,
      py::arg("oracle_paths") = 100000, py::arg("oracle_steps") = 1000,
      py::arg("seed") = 1,
      "estimator comparison rows (variance, counts, CV) as dicts");
}
