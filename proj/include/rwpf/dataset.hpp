#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rwpf/filter.hpp"

namespace rwpf {

// A simulated (or loaded) observation record set plus the latent truth used
// for evaluation. params carries the numeric model/noise parameters under
// stable keys so a dataset file round-trips exactly.
struct Dataset {
  Regime regime = Regime::noisy;
  std::string model = "sine";
  std::uint64_t seed = 0;
  std::map<std::string, double> params;
  std::vector<Observation> observations;
  std::vector<std::pair<double, double>> latent;  // (time, state)
};

// Latent sine-drift path advanced exactly (rejection sampling, no grid), noisy
// Gaussian observations at delta-spaced times up to t_end.
Dataset simulate_sine_dataset(double t_end, double delta, double sigma,
                              std::uint64_t seed);

// Mean-reverting latent path on a fine grid (its transition is Gaussian in
// closed form), events by thinning against 1.5x the per-cell endpoint maximum
// of the intensity; a realised intensity above the bound triggers grid
// refinement and a fresh attempt. Event-time states are drawn exactly from the
// conditional law between grid points and stored in the latent record.
Dataset simulate_cox_dataset(double intensity_offset, double intensity_slope,
                             double rho, double t_end, double grid_dt,
                             std::uint64_t seed);

// Mean-reverting path observed with Gaussian noise at delta-spaced times; the
// linear-Gaussian case with an exact filtering recursion to compare against.
Dataset simulate_ou_dataset(double rho, double sigma, double delta,
                            std::size_t n_obs, std::uint64_t seed);

// One header line of key=value tokens, then time,value,is_pseudo records
// (value empty for events and pseudo times); latent truth in path + ".truth".
// Full double precision, locale-independent.
void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path);

// Piecewise-linear latent lookup (exact at stored times).
double latent_at(const Dataset& ds, double time);

const char* regime_name(Regime r);
Regime regime_from_name(const std::string& name);

// Rebuild the model a dataset was generated from (by name + params).
DiffusionModel model_for_dataset(const Dataset& ds);

}  // namespace rwpf
