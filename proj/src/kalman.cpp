#include "rwpf/kalman.hpp"

#include <cmath>
#include <stdexcept>

namespace rwpf {

std::vector<KalmanMoments> kalman_filter_ou(
    double rho, double sigma, double prior_mean, double prior_var,
    const std::vector<Observation>& observations, double start_time) {
  if (!(rho > 0.0) || !(sigma > 0.0) || !(prior_var >= 0.0)) {
    throw std::invalid_argument("kalman_filter_ou: bad parameters");
  }
  const double obs_var = sigma * sigma;
  double m = prior_mean;
  double v = prior_var;
  double t = start_time;
  std::vector<KalmanMoments> out;
  out.reserve(observations.size());
  for (const auto& o : observations) {
    const double delta = o.time - t;
    if (!(delta > 0.0)) {
      throw std::invalid_argument("kalman_filter_ou: times must increase");
    }
    const double decay = std::exp(-rho * delta);
    m *= decay;
    v = decay * decay * v - std::expm1(-2.0 * rho * delta) / (2.0 * rho);
    if (o.regime == Regime::noisy && !o.is_pseudo && std::isfinite(o.value)) {
      const double gain = v / (v + obs_var);
      m += gain * (o.value - m);
      v *= 1.0 - gain;
    }
    t = o.time;
    out.push_back(KalmanMoments{t, m, v});
  }
  return out;
}

}  // namespace rwpf
