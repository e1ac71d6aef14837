#pragma once

#include <map>
#include <optional>

#include "rwpf/numerics.hpp"
#include "rwpf/rng.hpp"

namespace rwpf {

// Brownian bridge pinned to W_u = x and W_t = z over [u, t].
struct BridgeSpec {
  double x = 0.0;
  double z = 0.0;
  double u = 0.0;
  double t = 1.0;
  double duration() const { return t - u; }
};

void validate(const BridgeSpec& spec);

// Mean and variance of W_s conditioned on bracketing known values
// (s0, w0) and (s1, w1).
double bridge_conditional_mean(double s0, double w0, double s1, double w1,
                               double s);
double bridge_conditional_var(double s0, double s1, double s);

// Certified bracket of P(lower < W_s < upper for all s) for a Brownian bridge
// of the given duration, computed from the classical alternating reflection
// series. refine() adds one term pair and tightens a rigorous tail bound, so
// [lower_bound, upper_bound] always contains the true probability and shrinks
// monotonically. Endpoints on or outside a barrier give the constant 0.
class CrossingBracket {
 public:
  CrossingBracket(double x, double z, double duration, double lower,
                  double upper);

  double lower_bound() const { return lo_; }
  double upper_bound() const { return hi_; }
  double width() const { return hi_ - lo_; }
  bool degenerate() const { return degenerate_; }

  void refine();
  // refine until the bracket is narrower than 2*tol, return the midpoint
  double value(double tol);

 private:
  double u1_, u2_, v1_, v2_, big_d_, t_, m_;
  double partial_ = 1.0;
  int terms_ = 0;
  double lo_ = 0.0, hi_ = 1.0;
  bool degenerate_ = false;  // endpoint on/outside a barrier: probability 0
};

// P(lower < W_s < upper on [u,t] | endpoints), to within tol. Returns 0 when an
// endpoint lies on or outside a barrier.
double two_sided_noncrossing_prob(const BridgeSpec& spec, double lower,
                                  double upper, double tol = 1e-10);

// Lazily sampled bridge skeleton: repeated queries at the same time return the
// cached value; new queries condition on the bracketing known points.
class BridgePath {
 public:
  explicit BridgePath(const BridgeSpec& spec);

  const BridgeSpec& spec() const { return spec_; }
  const std::map<double, double>& points() const { return points_; }

  // plain-bridge-law draw (no layer conditioning)
  double sample_plain(double s, RngStream& rng);

  // neighbours strictly bracketing s (s must not be a known point)
  std::pair<std::pair<double, double>, std::pair<double, double>> brackets(
      double s) const;

  std::optional<double> known(double s) const;
  void insert(double s, double w) { points_.emplace(s, w); }

 private:
  BridgeSpec spec_;
  std::map<double, double> points_;
};

// Bridge together with an interval known to contain the whole path, plus the
// induced bounds on g along the path. Two modes:
//  - layered: the layer index J was sampled exactly (path escaped rectangle
//    J-1 but stays inside rectangle J); interior points are drawn from the
//    bridge law conditioned on that event by retrospective rejection.
//  - global: a user-supplied interval bounds g everywhere (e.g. a bounded
//    phi); interior points follow the plain bridge law.
class LayeredBridge {
 public:
  // Samples the layer index by inverting the layer distribution
  // P(J <= j) = P(path stays inside [min(x,z)-j*a, max(x,z)+j*a]).
  // Requires a > sqrt(duration/3) for the series envelopes to behave.
  static LayeredBridge sample_layer(const BridgeSpec& spec, double a,
                                    RngStream& rng);

  // No layer conditioning; value_bounds must hold for g along any path.
  static LayeredBridge with_global_bounds(const BridgeSpec& spec,
                                          Interval g_bounds);

  const BridgeSpec& spec() const { return path_.spec(); }
  bool layered() const { return layered_; }
  int layer() const { return layer_; }

  // state-space rectangle containing the path (layered mode only)
  const Interval& rectangle() const { return outer_; }

  void set_value_bounds(Interval b) { value_bounds_ = b; }
  const Interval& value_bounds() const { return value_bounds_; }

  // Draw (or recall) the path value at time s, consistent with everything
  // sampled so far and, in layered mode, with the layer event.
  double point(double s, RngStream& rng);

  const std::map<double, double>& points() const { return path_.points(); }

  long rejection_trials() const { return rejection_trials_; }

 private:
  explicit LayeredBridge(const BridgeSpec& spec) : path_(spec) {}

  double sample_conditional(double s, RngStream& rng);

  BridgePath path_;
  bool layered_ = false;
  int layer_ = 0;
  Interval outer_{0.0, 0.0};  // rectangle for layer J
  Interval inner_{0.0, 0.0};  // rectangle for layer J-1
  Interval value_bounds_{0.0, 0.0};
  long rejection_trials_ = 0;
};

// Bounds on g over the layered rectangle: evaluates the model-supplied range
// and stores it on the bridge. Defined in estimators.cpp next to its users.

}  // namespace rwpf
