#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace rwpf {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

namespace detail {

inline double simpson_panel(double a, double fa, double b, double fb,
                            double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adaptive_simpson_rec(const F& f, double a, double fa, double b, double fb,
                            double m, double fm, double whole, double tol,
                            int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson_panel(a, fa, m, fm, flm);
  const double right = simpson_panel(m, fm, b, fb, frm);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson quadrature with a relative tolerance (falls back to a small
// absolute floor when the integral is near zero).
template <class F>
double adaptive_simpson(const F& f, double a, double b, double rel_tol,
                        int max_depth = 40) {
  if (!(rel_tol > 0.0)) throw std::invalid_argument("adaptive_simpson: tolerance");
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = detail::simpson_panel(a, fa, b, fb, fm);
  const double scale = std::max(std::fabs(whole), 1e-12);
  return detail::adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole,
                                      rel_tol * scale, max_depth);
}

// Golden-section minimiser on [a,b]; assumes f is unimodal on the bracket.
template <class F>
double golden_section_min(const F& f, double a, double b, double tol = 1e-10) {
  static const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

inline double sq(double v) { return v * v; }

// Categorical sampling by inverse CDF over unnormalised non-negative weights.
// Feed it uniforms; it owns no RNG so callers keep full stream control.
class DiscreteSampler {
 public:
  explicit DiscreteSampler(const std::vector<double>& weights) {
    cum_.reserve(weights.size());
    double running = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw std::invalid_argument("DiscreteSampler: weights must be finite and >= 0");
      }
      running += w;
      cum_.push_back(running);
    }
    if (cum_.empty() || !(running > 0.0)) {
      throw std::invalid_argument("DiscreteSampler: total weight must be > 0");
    }
  }

  double total() const { return cum_.back(); }

  std::size_t sample(double u01) const {
    const double target = u01 * cum_.back();
    auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
    if (it == cum_.end()) --it;
    return static_cast<std::size_t>(it - cum_.begin());
  }

 private:
  std::vector<double> cum_;
};

// standard normal density with variance var
inline double gaussian_density(double diff, double var) {
  return std::exp(-0.5 * diff * diff / var) / std::sqrt(2.0 * M_PI * var);
}

inline double gaussian_log_density(double diff, double var) {
  return -0.5 * diff * diff / var - 0.5 * std::log(2.0 * M_PI * var);
}

}  // namespace rwpf
