#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rwpf/model.hpp"
#include "rwpf/numerics.hpp"
#include "rwpf/rng.hpp"

using namespace rwpf;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("sine model basic values") {
  const DiffusionModel m = make_sine_model();
  CHECK(m.name == "sine");
  CHECK(m.drift(0.0) == doctest::Approx(0.0));
  CHECK(m.drift(kPi / 2) == doctest::Approx(1.0));
  CHECK(m.potential(0.0) == doctest::Approx(-1.0));  // A = -cos
  CHECK(m.potential(kPi) == doctest::Approx(1.0));
  CHECK(m.phi_shift == doctest::Approx(-0.5));

  // phi = (sin^2 u + cos u + 1)/2: 1 at the origin, 0 at the trough, peak 9/8.
  CHECK(m.phi(0.0) == doctest::Approx(1.0));
  CHECK(m.phi(kPi) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(m.phi(kPi / 3) == doctest::Approx(9.0 / 8.0));
  REQUIRE(m.phi_global_bounds.has_value());
  CHECK(m.phi_global_bounds->lo == doctest::Approx(0.0));
  CHECK(m.phi_global_bounds->hi == doctest::Approx(9.0 / 8.0));
  REQUIRE(m.potential_max.has_value());
  CHECK(*m.potential_max == doctest::Approx(1.0));

  // phi consistency with its definition from the drift.
  for (double u : {-2.0, -0.3, 0.7, 2.5, 4.0}) {
    const double direct =
        0.5 * (m.drift(u) * m.drift(u) + m.drift_derivative(u)) - m.phi_shift;
    CHECK(m.phi(u) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("sine phi is nonnegative on a fine sweep") {
  const DiffusionModel m = make_sine_model();
  for (int i = -400; i <= 400; ++i) {
    CHECK(m.phi(i * 0.025) >= -1e-12);
  }
}

TEST_CASE("ou model values and transition moments") {
  const double rho = 0.5;
  const DiffusionModel m = make_ou_model(rho);
  CHECK(m.drift(2.0) == doctest::Approx(-1.0));
  CHECK(m.phi_shift == doctest::Approx(-rho / 2.0));
  CHECK(m.phi(2.0) == doctest::Approx(0.5));  // rho^2 x^2 / 2
  CHECK(m.phi(0.0) == doctest::Approx(0.0));
  CHECK_FALSE(m.phi_global_bounds.has_value());  // unbounded above

  REQUIRE(static_cast<bool>(m.transition_mean));
  REQUIRE(static_cast<bool>(m.transition_var));
  const double delta = 0.7;
  CHECK(m.transition_mean(1.3, delta) ==
        doctest::Approx(std::exp(-rho * delta) * 1.3));
  CHECK(m.transition_var(1.3, delta) ==
        doctest::Approx((1.0 - std::exp(-2.0 * rho * delta)) / (2.0 * rho)));

  // The sine model has no closed-form transition: the prior proposal is
  // unavailable and callers must fall back to the locally-linearised one.
  const DiffusionModel s = make_sine_model();
  CHECK_FALSE(static_cast<bool>(s.transition_mean));
}

TEST_CASE("ou model with event intensity") {
  const DiffusionModel m = make_ou_model(0.5, 0.0, 20.0);
  REQUIRE(m.has_intensity());
  CHECK(m.cox_intensity(0.5) == doctest::Approx(10.0));
  CHECK(m.cox_intensity(-0.5) == doctest::Approx(10.0));

  // g = phi + nu over [0, 2]: phi max 0.5 at x=2 plus nu max 40.
  const Interval r = g_range_over_interval(m, true, 0.0, 2.0);
  CHECK(r.lo == doctest::Approx(0.0));
  CHECK(r.hi == doctest::Approx(40.5));
}

TEST_CASE("g_range covers interior critical points") {
  const DiffusionModel m = make_sine_model();
  // Over [0, pi] the max of phi sits at the interior point pi/3 and the min at
  // the right endpoint.
  const Interval r = g_range_over_interval(m, false, 0.0, kPi);
  CHECK(r.hi == doctest::Approx(9.0 / 8.0));
  CHECK(r.lo == doctest::Approx(0.0).epsilon(1e-12));

  // Away from critical points the range is the endpoint values.
  const Interval r2 = g_range_over_interval(m, false, 1.2, 1.5);
  CHECK(r2.hi == doctest::Approx(m.phi(1.2)));
  CHECK(r2.lo == doctest::Approx(m.phi(1.5)));

  // Range bound: a fine sweep never leaves [lo, hi].
  for (auto [lo, hi] : {std::pair{-2.0, 1.0}, {0.3, 5.0}, {-7.0, -6.0}}) {
    const Interval rr = g_range_over_interval(m, false, lo, hi);
    for (int i = 0; i <= 200; ++i) {
      const double u = lo + (hi - lo) * i / 200.0;
      CHECK(m.phi(u) >= rr.lo - 1e-10);
      CHECK(m.phi(u) <= rr.hi + 1e-10);
    }
  }
}

TEST_CASE("chord integral closed forms match quadrature") {
  // Sine: chord from 0 to pi over t=1 integrates phi to exactly 3/4.
  const DiffusionModel s = make_sine_model();
  CHECK(chord_g_integral(s, false, 0.0, kPi, 1.0) == doctest::Approx(0.75));

  // Closed forms agree with independent Simpson quadrature on random chords.
  const DiffusionModel c = make_ou_model(0.5, 0.0, 20.0);
  RngStream rng(9001);
  for (int i = 0; i < 50; ++i) {
    const double x = rng.normal(0.0, 2.0);
    const double z = rng.normal(0.0, 2.0);
    const double t = rng.uniform(0.05, 3.0);
    for (const DiffusionModel* m : {&s, &c}) {
      for (bool inc : {false, true}) {
        if (inc && !m->has_intensity()) continue;
        const auto g = [&](double sfrac) {
          const double u = x + (z - x) * sfrac;
          double v = m->phi(u);
          if (inc) v += m->cox_intensity(u);
          return v * t;
        };
        double simpson = 0.0;
        const int n = 2000;
        for (int k = 0; k < n; ++k) {
          const double a = static_cast<double>(k) / n;
          const double b = static_cast<double>(k + 1) / n;
          simpson += (g(a) + 4.0 * g(0.5 * (a + b)) + g(b)) * (b - a) / 6.0;
        }
        CHECK(chord_g_integral(*m, inc, x, z, t) ==
              doctest::Approx(simpson).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("lamperti transform on constant and linear volatility") {
  // Constant sigma: eta(z) = (z - u*)/sigma.
  CHECK(lamperti_transform_1d([](double) { return 2.0; }, 1.0, 5.0) ==
        doctest::Approx(2.0));
  // sigma(u) = u on a positive range: eta(z) = log(z/u*).
  CHECK(lamperti_transform_1d([](double u) { return u; }, 1.0, std::exp(1.0)) ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(
      lamperti_transform_1d([](double u) { return u; }, -1.0, 1.0),
      std::domain_error);
}
