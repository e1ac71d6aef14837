#pragma once

#include <vector>

#include "rwpf/filter.hpp"

namespace rwpf {

struct KalmanMoments {
  double time = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

// Exact filtering moments for the linear-Gaussian case: mean-reverting state
// (rate rho, unit diffusion) observed with Gaussian noise sd sigma. Pseudo
// observations contribute a predict-only step. One record per observation,
// posterior moments after the update.
std::vector<KalmanMoments> kalman_filter_ou(
    double rho, double sigma, double prior_mean, double prior_var,
    const std::vector<Observation>& observations, double start_time = 0.0);

}  // namespace rwpf
