#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "rwpf/bench.hpp"
#include "rwpf/estimators.hpp"
#include "rwpf/model.hpp"

using namespace rwpf;

namespace {
constexpr double kPi = std::numbers::pi;

PathFunction sine_phi() {
  const DiffusionModel m = make_sine_model();
  return m.phi;
}
}  // namespace

TEST_CASE("poisson estimator with constant g is a zero-one mixture") {
  const BridgeSpec spec{0.0, 0.0, 0.0, 1.0};
  const PathFunction g = [](double) { return 1.0; };
  RngStream rng(1);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const Estimate e = poisson_estimator(g, spec, 1.0, 1.0, rng);
    // c = lambda = 1: each product term is exactly zero, so the draw is the
    // indicator of kappa == 0.
    CHECK((e.value == 1.0 || e.value == 0.0));
    CHECK((e.kappa == 0) == (e.value == 1.0));
    sum += e.value;
  }
  const double mean = sum / n;
  const double want = std::exp(-1.0);
  const double se = std::sqrt(want * (1.0 - want) / n);
  CHECK(std::fabs(mean - want) <= 3.0 * se);
}

TEST_CASE("poisson estimator is unbiased for the sine functional") {
  const PathFunction g = sine_phi();
  const BridgeSpec spec{0.0, kPi, 0.0, 1.0};
  RngStream orng(100);
  const FineGridMoments oracle =
      fine_grid_bridge_functional(g, spec, 100000, 1000, orng);

  RngStream rng(101);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  int negatives = 0;
  for (int i = 0; i < n; ++i) {
    const Estimate e = poisson_estimator(g, spec, 9.0 / 8.0, 9.0 / 8.0, rng);
    CHECK(e.value >= 0.0);  // c at the sup keeps every factor nonnegative
    negatives += e.negative ? 1 : 0;
    sum += e.value;
    sum2 += e.value * e.value;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  const double se = std::sqrt(var / n + oracle.se_mean * oracle.se_mean);
  CHECK(std::fabs(mean - oracle.mean) <= 3.0 * se);
  CHECK(negatives == 0);
}

TEST_CASE("poisson estimator flags signed draws when c is below the sup") {
  const PathFunction g = sine_phi();
  const BridgeSpec spec{0.0, 0.0, 0.0, 1.0};
  RngStream rng(7);
  int negatives = 0;
  for (int i = 0; i < 20000; ++i) {
    const Estimate e = poisson_estimator(g, spec, 1.0, 1.0, rng);
    if (e.value < 0.0) {
      CHECK(e.negative);
      ++negatives;
    }
  }
  CHECK(negatives > 0);
}

TEST_CASE("generalised estimator with constant g") {
  const double c = 0.8;
  const BridgeSpec spec{0.0, 0.0, 0.0, 1.0};
  const PathFunction g = [c](double) { return c; };
  // Geometric count pmf: p(k) = 2^-(k+1).
  const auto pmf = [](long k) { return std::pow(0.5, k + 1); };
  RngStream rng(11);
  const int n = 50000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    LayeredBridge bridge =
        LayeredBridge::with_global_bounds(spec, Interval{c, c});
    const Estimate e = gpe(g, bridge, pmf, rng);
    // U_W = c: the draw is e^{-c}/p(0) on kappa = 0 and exactly zero otherwise.
    if (e.kappa == 0) {
      CHECK(e.value == doctest::Approx(std::exp(-c) / pmf(0)).epsilon(1e-12));
    } else {
      CHECK(e.value == 0.0);
    }
    sum += e.value;
  }
  const double want = std::exp(-c);
  CHECK(sum / n == doctest::Approx(want).epsilon(0.02));
}

TEST_CASE("gpe1 with constant g is exact with zero variance") {
  const double c = 1.3;
  const BridgeSpec spec{0.2, -0.4, 0.0, 2.0};
  const PathFunction g = [c](double) { return c; };
  RngStream rng(13);
  for (int i = 0; i < 100; ++i) {
    LayeredBridge bridge =
        LayeredBridge::with_global_bounds(spec, Interval{c, c});
    const Estimate e = gpe1(g, bridge, rng);
    CHECK(e.kappa == 0);
    CHECK(e.value == doctest::Approx(std::exp(-c * 2.0)).epsilon(1e-12));
  }
}

TEST_CASE("gpe1 is unbiased and respects its upper bound") {
  const DiffusionModel model = make_sine_model();
  const PathFunction g = model.phi;
  const BridgeSpec spec{0.0, kPi, 0.0, 1.0};
  RngStream orng(200);
  const FineGridMoments oracle =
      fine_grid_bridge_functional(g, spec, 100000, 1000, orng);

  EstimatorConfig cfg;
  cfg.use_global_bounds = false;
  RngStream rng(201);
  const int n = 50000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    LayeredBridge bridge = prepare_bridge(model, false, spec, cfg, rng);
    const double upper =
        std::exp(-bridge.value_bounds().lo * spec.duration());
    const Estimate e = gpe1(g, bridge, rng);
    CHECK(e.value >= 0.0);
    CHECK(e.value <= upper * (1.0 + 1e-12));
    sum += e.value;
    sum2 += e.value * e.value;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  const double se = std::sqrt(var / n + oracle.se_mean * oracle.se_mean);
  CHECK(std::fabs(mean - oracle.mean) <= 3.0 * se);
}

TEST_CASE("gpe2 constant-g degenerate path returns the exact weight") {
  const double c = 0.6;
  const BridgeSpec spec{0.0, 0.0, 0.0, 1.0};
  const PathFunction g = [c](double) { return c; };
  RngStream rng(17);
  double sum = 0.0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    LayeredBridge bridge =
        LayeredBridge::with_global_bounds(spec, Interval{c, c});
    const Estimate e = gpe2(g, bridge, 10.0, rng, c * spec.duration());
    CHECK(e.value == doctest::Approx(std::exp(-c)).epsilon(1e-6));
    sum += e.value;
  }
  CHECK(sum / n == doctest::Approx(std::exp(-c)).epsilon(1e-4));
}

TEST_CASE("gpe2 is unbiased with the analytic chord count mean") {
  const DiffusionModel model = make_sine_model();
  const PathFunction g = model.phi;
  const BridgeSpec spec{0.0, kPi, 0.0, 1.0};
  RngStream orng(300);
  const FineGridMoments oracle =
      fine_grid_bridge_functional(g, spec, 100000, 1000, orng);

  EstimatorConfig cfg;
  RngStream rng(301);
  const int n = 50000;
  double sum = 0.0, sum2 = 0.0, ksum = 0.0;
  for (int i = 0; i < n; ++i) {
    LayeredBridge bridge = prepare_bridge(model, false, spec, cfg, rng);
    const double chord = chord_g_integral(model, false, 0.0, kPi, 1.0);
    const Estimate e = gpe2(g, bridge, 10.0, rng, chord);
    CHECK(e.value >= 0.0);
    sum += e.value;
    sum2 += e.value * e.value;
    ksum += static_cast<double>(e.kappa);
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  const double se = std::sqrt(var / n + oracle.se_mean * oracle.se_mean);
  CHECK(std::fabs(mean - oracle.mean) <= 3.0 * se);

  // From 0 to pi the rectangle always contains the phi maximiser, so the
  // count mean is exactly 9/8 - 3/4 = 3/8 whatever layer was drawn.
  const double gamma = 9.0 / 8.0 - 0.75;
  const double kvar = gamma * (1.0 + gamma / 10.0);
  CHECK(std::fabs(ksum / n - gamma) <= 3.0 * std::sqrt(kvar / n));
}

TEST_CASE("optimal count pmf closed cases and optimality") {
  const std::vector<double> p1 = optimal_kappa_pmf({1.0, 1.0});
  REQUIRE(p1.size() == 2);
  CHECK(p1[0] == doctest::Approx(0.5));
  CHECK(p1[1] == doctest::Approx(0.5));

  const std::vector<double> p2 = optimal_kappa_pmf({1.0, 4.0});
  CHECK(p2[0] == doctest::Approx(1.0 / 3.0));
  CHECK(p2[1] == doctest::Approx(2.0 / 3.0));

  // Square-root weighting minimises sum f_k / p_k over pmfs.
  RngStream rng(23);
  for (int s = 0; s < 20; ++s) {
    const int k = 2 + static_cast<int>(rng.uniform_index(5));
    std::vector<double> f(k);
    for (double& v : f) v = std::exp(rng.normal(0.0, 1.5));
    const std::vector<double> popt = optimal_kappa_pmf(f);
    double obj_opt = 0.0;
    for (int i = 0; i < k; ++i) obj_opt += f[i] / popt[i];
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> q(k);
      double tot = 0.0;
      for (double& v : q) {
        v = rng.uniform_pos();
        tot += v;
      }
      double obj = 0.0;
      for (int i = 0; i < k; ++i) obj += f[i] / (q[i] / tot);
      CHECK(obj >= obj_opt * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("discretised weight is exact for constant g") {
  const double c = 0.9;
  const PathFunction g = [c](double) { return c; };
  const BridgeSpec spec{0.3, 1.1, 0.0, 2.0};
  RngStream rng(29);
  for (int m : {1, 3, 8}) {
    const Estimate e = discretised_weight(g, spec, m, rng);
    CHECK(e.value == doctest::Approx(std::exp(-c * 2.0)).epsilon(1e-12));
  }
}

TEST_CASE("euler bridge density estimate is exact for zero drift") {
  DiffusionModel flat;
  flat.drift = [](double) { return 0.0; };
  RngStream rng(31);
  for (int m : {1, 4, 9}) {
    for (int i = 0; i < 50; ++i) {
      const double x0 = rng.normal(0.0, 1.0);
      const double xt = rng.normal(0.0, 1.0);
      const double t = rng.uniform(0.2, 2.0);
      // With no drift the Euler densities are the Brownian transition and the
      // proposal telescopes against them exactly.
      const double v = euler_bridge_density_estimate(flat, x0, xt, t, m, rng);
      CHECK(v == doctest::Approx(gaussian_density(xt - x0, t)).epsilon(1e-10));
    }
  }
}

TEST_CASE("transition density estimate is unbiased in the linear case") {
  const double rho = 0.5;
  const DiffusionModel model = make_ou_model(rho);
  const double x0 = 0.8, xt = -0.3, t = 1.0;
  const double mexact = std::exp(-rho * t) * x0;
  const double vexact = (1.0 - std::exp(-2.0 * rho * t)) / (2.0 * rho);
  const double truth = gaussian_density(xt - mexact, vexact);

  EstimatorConfig cfg;  // layered gpe2
  RngStream rng(37);
  const int n = 40000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const Estimate e = transition_density_estimate(model, x0, xt, t, cfg, rng);
    sum += e.value;
    sum2 += e.value * e.value;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::fabs(mean - truth) <= 3.0 * std::sqrt(var / n));
}

TEST_CASE("diagnostics summarise draws and the reference-based cv") {
  std::vector<Estimate> draws(4);
  draws[0].value = 1.0;
  draws[1].value = 2.0;
  draws[2].value = 3.0;
  draws[3].value = 2.0;
  draws[2].kappa = 4;
  const EstimatorDiagnostics d = estimator_diagnostics(draws, 2.0);
  CHECK(d.n == 4);
  CHECK(d.sample_mean == doctest::Approx(2.0));
  CHECK(d.sample_variance == doctest::Approx(2.0 / 3.0));
  CHECK(d.mean_kappa == doctest::Approx(1.0));
  // RMSE around the reference 2: sqrt((1+0+1+0)/4)/2.
  CHECK(d.coefficient_of_variation ==
        doctest::Approx(std::sqrt(0.5) / 2.0));
}

TEST_CASE("stochastic rate functional vanishes for constant g at its bound") {
  const double c = 0.7;
  const PathFunction g = [c](double) { return c; };
  const BridgeSpec spec{0.0, 0.0, 0.0, 1.0};
  RngStream rng(41);
  CHECK(lambda_w_fine_grid(g, spec, c, 200, rng) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(lambda_w_fine_grid(g, spec, c + 1.0, 200, rng) ==
        doctest::Approx(1.0).epsilon(1e-12));  // sqrt(t * 1^2 * t)
}

TEST_CASE("prepare_bridge global mode uses the model bounds without layers") {
  const DiffusionModel model = make_sine_model();
  EstimatorConfig cfg;
  cfg.use_global_bounds = true;
  RngStream rng(43);
  const BridgeSpec spec{0.0, 1.0, 0.0, 1.0};
  LayeredBridge b = prepare_bridge(model, false, spec, cfg, rng);
  CHECK_FALSE(b.layered());
  CHECK(b.value_bounds().lo == doctest::Approx(0.0));
  CHECK(b.value_bounds().hi == doctest::Approx(9.0 / 8.0));
}

TEST_CASE("prepare_bridge layered mode bounds g over the sampled rectangle") {
  const DiffusionModel model = make_sine_model();
  EstimatorConfig cfg;
  RngStream rng(47);
  const BridgeSpec spec{0.0, 1.0, 0.0, 1.0};
  for (int i = 0; i < 200; ++i) {
    LayeredBridge b = prepare_bridge(model, false, spec, cfg, rng);
    CHECK(b.layered());
    const Interval want = g_range_over_interval(
        model, false, b.rectangle().lo, b.rectangle().hi);
    CHECK(b.value_bounds().lo == doctest::Approx(want.lo));
    CHECK(b.value_bounds().hi == doctest::Approx(want.hi));
  }
}
