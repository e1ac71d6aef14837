#include "rwpf/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace rwpf {

void validate(const BridgeSpec& spec) {
  if (!(spec.t > spec.u)) {
    throw std::invalid_argument("BridgeSpec: requires t > u");
  }
  if (!std::isfinite(spec.x) || !std::isfinite(spec.z) ||
      !std::isfinite(spec.u) || !std::isfinite(spec.t)) {
    throw std::invalid_argument("BridgeSpec: non-finite field");
  }
}

double bridge_conditional_mean(double s0, double w0, double s1, double w1,
                               double s) {
  return w0 + (s - s0) / (s1 - s0) * (w1 - w0);
}

double bridge_conditional_var(double s0, double s1, double s) {
  return (s - s0) * (s1 - s) / (s1 - s0);
}

CrossingBracket::CrossingBracket(double x, double z, double duration,
                                 double lower, double upper)
    : t_(duration) {
  u1_ = x - lower;
  u2_ = z - lower;
  v1_ = upper - x;
  v2_ = upper - z;
  big_d_ = upper - lower;
  m_ = std::max(std::max(u1_, u2_), std::max(v1_, v2_));
  // an endpoint on or beyond a barrier counts as already crossed
  if (!(u1_ > 0.0) || !(u2_ > 0.0) || !(v1_ > 0.0) || !(v2_ > 0.0)) {
    degenerate_ = true;
    lo_ = hi_ = 0.0;
  }
}

void CrossingBracket::refine() {
  if (degenerate_ || width() == 0.0) return;
  const int j = ++terms_;
  const double jd = j * big_d_;
  const double diff = u2_ - u1_;  // z - x
  const double sigma_term =
      std::exp(-2.0 * (jd - u1_) * (jd - u2_) / t_) +
      std::exp(-2.0 * (jd - v1_) * (jd - v2_) / t_);
  const double phi_term = std::exp(-2.0 * jd * (jd - diff) / t_) +
                          std::exp(-2.0 * jd * (jd + diff) / t_);
  partial_ += phi_term - sigma_term;
  // rigorous geometric tail bound: every later term is at most
  // 4*exp(-2*(jD-m)^2/t) and successive terms shrink at least by q
  const double r_next = 4.0 * std::exp(-2.0 * sq((j + 1) * big_d_ - m_) / t_);
  const double q =
      std::exp(-2.0 * big_d_ * ((2.0 * j + 3.0) * big_d_ - 2.0 * m_) / t_);
  const double tail = r_next / (1.0 - q);
  lo_ = std::max(lo_, std::max(0.0, partial_ - tail));
  hi_ = std::min(hi_, std::min(1.0, partial_ + tail));
  if (lo_ > hi_) {  // numerical underflow of the tail; collapse to midpoint
    const double mid = 0.5 * (lo_ + hi_);
    lo_ = hi_ = mid;
  }
}

double CrossingBracket::value(double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("CrossingBracket: tolerance");
  int guard = 0;
  while (width() > tol) {
    refine();
    if (++guard > 100000) {
      throw std::runtime_error("CrossingBracket: series failed to converge");
    }
  }
  return std::clamp(0.5 * (lo_ + hi_), 0.0, 1.0);
}

double two_sided_noncrossing_prob(const BridgeSpec& spec, double lower,
                                  double upper, double tol) {
  validate(spec);
  if (!(lower < upper)) {
    throw std::invalid_argument("two_sided_noncrossing_prob: lower >= upper");
  }
  CrossingBracket bracket(spec.x, spec.z, spec.duration(), lower, upper);
  if (bracket.degenerate()) return 0.0;
  return bracket.value(tol);
}

BridgePath::BridgePath(const BridgeSpec& spec) : spec_(spec) {
  validate(spec);
  points_.emplace(spec.u, spec.x);
  points_.emplace(spec.t, spec.z);
}

std::optional<double> BridgePath::known(double s) const {
  auto it = points_.find(s);
  if (it == points_.end()) return std::nullopt;
  return it->second;
}

std::pair<std::pair<double, double>, std::pair<double, double>>
BridgePath::brackets(double s) const {
  auto after = points_.lower_bound(s);
  auto before = std::prev(after);
  return {{before->first, before->second}, {after->first, after->second}};
}

double BridgePath::sample_plain(double s, RngStream& rng) {
  if (s < spec_.u || s > spec_.t) {
    throw std::invalid_argument("bridge point query outside [u, t]");
  }
  if (auto v = known(s)) return *v;
  auto [b0, b1] = brackets(s);
  const double mean = bridge_conditional_mean(b0.first, b0.second, b1.first,
                                              b1.second, s);
  const double var = bridge_conditional_var(b0.first, b1.first, s);
  const double w = rng.normal(mean, std::sqrt(var));
  points_.emplace(s, w);
  return w;
}

LayeredBridge LayeredBridge::sample_layer(const BridgeSpec& spec, double a,
                                          RngStream& rng) {
  validate(spec);
  const double tau = spec.duration();
  if (!(a > std::sqrt(tau / 3.0))) {
    throw std::invalid_argument(
        "sample_layer: layer width must exceed sqrt(duration/3)");
  }
  const double lo0 = std::min(spec.x, spec.z);
  const double hi0 = std::max(spec.x, spec.z);
  const double ucdf = rng.uniform();
  LayeredBridge out(spec);
  out.layered_ = true;
  for (int j = 1; j <= 10000; ++j) {
    CrossingBracket layer_cdf(spec.x, spec.z, tau, lo0 - j * a, hi0 + j * a);
    int guard = 0;
    for (;;) {
      if (ucdf <= layer_cdf.lower_bound()) {
        out.layer_ = j;
        out.outer_ = Interval{lo0 - j * a, hi0 + j * a};
        out.inner_ = Interval{lo0 - (j - 1) * a, hi0 + (j - 1) * a};
        return out;
      }
      if (ucdf > layer_cdf.upper_bound()) break;  // beyond this layer
      layer_cdf.refine();
      if (++guard > 200) {
        // bracket collapsed onto ucdf (measure-zero tie): take this layer
        out.layer_ = j;
        out.outer_ = Interval{lo0 - j * a, hi0 + j * a};
        out.inner_ = Interval{lo0 - (j - 1) * a, hi0 + (j - 1) * a};
        return out;
      }
    }
  }
  throw std::runtime_error("sample_layer: layer index overflow");
}

LayeredBridge LayeredBridge::with_global_bounds(const BridgeSpec& spec,
                                                Interval g_bounds) {
  validate(spec);
  LayeredBridge out(spec);
  out.layered_ = false;
  out.value_bounds_ = g_bounds;
  return out;
}

double LayeredBridge::point(double s, RngStream& rng) {
  if (!layered_) return path_.sample_plain(s, rng);
  const auto& spec = path_.spec();
  if (s < spec.u || s > spec.t) {
    throw std::invalid_argument("bridge point query outside [u, t]");
  }
  if (auto v = path_.known(s)) return *v;
  const double w = sample_conditional(s, rng);
  path_.insert(s, w);
  return w;
}

namespace {

struct FactorBrackets {
  std::vector<CrossingBracket> outer;
  std::vector<CrossingBracket> inner;

  double prod_lo(const std::vector<CrossingBracket>& v) const {
    double p = 1.0;
    for (const auto& b : v) p *= b.lower_bound();
    return p;
  }
  double prod_hi(const std::vector<CrossingBracket>& v) const {
    double p = 1.0;
    for (const auto& b : v) p *= b.upper_bound();
    return p;
  }
  // widest bracket gets refined next; returns false when all are tight
  bool refine_widest() {
    CrossingBracket* widest = nullptr;
    for (auto& b : outer) {
      if (!widest || b.width() > widest->width()) widest = &b;
    }
    for (auto& b : inner) {
      if (!widest || b.width() > widest->width()) widest = &b;
    }
    if (!widest || widest->width() < 1e-15) return false;
    widest->refine();
    return true;
  }
};

}  // namespace

double LayeredBridge::sample_conditional(double s, RngStream& rng) {
  const auto& spec = path_.spec();
  auto [b0, b1] = path_.brackets(s);
  const double mean = bridge_conditional_mean(b0.first, b0.second, b1.first,
                                              b1.second, s);
  const double sd = std::sqrt(bridge_conditional_var(b0.first, b1.first, s));

  // probabilities over the intervals not split by s are fixed for this query
  double other_p_lo = 1.0, other_p_hi = 1.0;
  double other_q_lo = 1.0, other_q_hi = 1.0;
  {
    const auto& pts = path_.points();
    for (auto it = pts.begin(); std::next(it) != pts.end(); ++it) {
      auto nx = std::next(it);
      if (it->first == b0.first && nx->first == b1.first) continue;  // split one
      const double dur = nx->first - it->first;
      CrossingBracket p(it->second, nx->second, dur, outer_.lo, outer_.hi);
      const double pv = p.degenerate() ? 0.0 : p.value(1e-12);
      other_p_lo *= std::max(0.0, pv - 1e-12);
      other_p_hi *= std::min(1.0, pv + 1e-12);
      CrossingBracket q(it->second, nx->second, dur, inner_.lo, inner_.hi);
      const double qv = q.degenerate() ? 0.0 : q.value(1e-12);
      other_q_lo *= std::max(0.0, qv - 1e-12);
      other_q_hi *= std::min(1.0, qv + 1e-12);
    }
  }

  for (long trial = 0; trial < 1000000; ++trial) {
    ++rejection_trials_;
    const double w = rng.normal(mean, sd);
    if (w <= outer_.lo || w >= outer_.hi) continue;
    FactorBrackets fb;
    fb.outer.emplace_back(b0.second, w, s - b0.first, outer_.lo, outer_.hi);
    fb.outer.emplace_back(w, b1.second, b1.first - s, outer_.lo, outer_.hi);
    fb.inner.emplace_back(b0.second, w, s - b0.first, inner_.lo, inner_.hi);
    fb.inner.emplace_back(w, b1.second, b1.first - s, inner_.lo, inner_.hi);
    const double v = rng.uniform();
    for (;;) {
      // P(stays in outer) - P(stays in inner), given the skeleton plus w
      const double alpha_lo = std::max(
          0.0, other_p_lo * fb.prod_lo(fb.outer) - other_q_hi * fb.prod_hi(fb.inner));
      const double alpha_hi = std::min(
          1.0, other_p_hi * fb.prod_hi(fb.outer) - other_q_lo * fb.prod_lo(fb.inner));
      if (v < alpha_lo) return w;
      if (v >= alpha_hi) break;  // reject this proposal
      if (!fb.refine_widest()) {
        // bracket collapsed onto v (measure-zero tie): deterministic tiebreak
        if (v < 0.5 * (alpha_lo + alpha_hi)) return w;
        break;
      }
    }
  }
  (void)spec;
  throw std::runtime_error("LayeredBridge: conditional sampling failed to accept");
}

}  // namespace rwpf
