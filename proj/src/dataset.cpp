#include "rwpf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rwpf/exact.hpp"

namespace rwpf {

namespace {

std::string format_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::scientific, 17);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error("dataset: bad numeric field '" + std::string(s) +
                             "'");
  }
  return v;
}

// conditional law of the mean-reverting path at s given values at a < s < b
std::pair<double, double> ou_bridge_moments(double rho, double a, double xa,
                                            double b, double xb, double s) {
  const double tau1 = s - a;
  const double tau2 = b - s;
  const double d1 = std::exp(-rho * tau1);
  const double d2 = std::exp(-rho * tau2);
  const double v1 = -std::expm1(-2.0 * rho * tau1) / (2.0 * rho);
  const double v2 = -std::expm1(-2.0 * rho * tau2) / (2.0 * rho);
  const double precision = 1.0 / v1 + d2 * d2 / v2;
  const double mean = (xa * d1 / v1 + xb * d2 / v2) / precision;
  return {mean, 1.0 / precision};
}

struct CoxAttempt {
  bool bound_violated = false;
  std::vector<Observation> events;
  std::vector<std::pair<double, double>> latent;
};

CoxAttempt simulate_cox_attempt(double offset, double slope, double rho,
                                double t_end, double grid_dt,
                                RngStream& rng) {
  CoxAttempt out;
  auto nu = [&](double x) { return offset + slope * std::fabs(x); };

  const auto n_cells = static_cast<std::size_t>(std::ceil(t_end / grid_dt));
  const double stationary_sd = std::sqrt(1.0 / (2.0 * rho));
  double x_prev = rng.normal(0.0, stationary_sd);
  double t_prev = 0.0;
  out.latent.emplace_back(0.0, x_prev);

  const double decay = std::exp(-rho * grid_dt);
  const double step_sd = std::sqrt(-std::expm1(-2.0 * rho * grid_dt) /
                                   (2.0 * rho));
  for (std::size_t k = 0; k < n_cells; ++k) {
    const double t_next = std::min((k + 1) * grid_dt, t_end);
    double x_next;
    if (t_next - t_prev < grid_dt * (1.0 - 1e-9)) {  // short final cell
      const double d = std::exp(-rho * (t_next - t_prev));
      x_next = rng.normal(
          x_prev * d,
          std::sqrt(-std::expm1(-2.0 * rho * (t_next - t_prev)) / (2.0 * rho)));
    } else {
      x_next = rng.normal(x_prev * decay, step_sd);
    }

    const double bound = 1.5 * std::max(nu(x_prev), nu(x_next));
    if (bound > 0.0) {
      const long n_cand = rng.poisson(bound * (t_next - t_prev));
      if (n_cand > 0) {
        std::vector<double> cand(static_cast<std::size_t>(n_cand));
        for (auto& s : cand) s = rng.uniform(t_prev, t_next);
        std::sort(cand.begin(), cand.end());
        // reveal the path left to right inside the cell
        double left_t = t_prev;
        double left_x = x_prev;
        for (double s : cand) {
          const auto [mean, var] =
              ou_bridge_moments(rho, left_t, left_x, t_next, x_next, s);
          const double xs = rng.normal(mean, std::sqrt(var));
          const double rate = nu(xs);
          if (rate > bound) {
            out.bound_violated = true;
            return out;
          }
          if (rng.uniform(0.0, bound) < rate) {
            Observation ev;
            ev.time = s;
            ev.regime = Regime::point_process;
            out.events.push_back(ev);
            out.latent.emplace_back(s, xs);
          }
          left_t = s;
          left_x = xs;
        }
      }
    }
    out.latent.emplace_back(t_next, x_next);
    t_prev = t_next;
    x_prev = x_next;
  }
  return out;
}

}  // namespace

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::noisy: return "noisy";
    case Regime::constrained: return "constrained";
    case Regime::point_process: return "point_process";
  }
  return "noisy";
}

Regime regime_from_name(const std::string& name) {
  if (name == "noisy") return Regime::noisy;
  if (name == "constrained") return Regime::constrained;
  if (name == "point_process") return Regime::point_process;
  throw std::runtime_error("dataset: unknown regime '" + name + "'");
}

Dataset simulate_sine_dataset(double t_end, double delta, double sigma,
                              std::uint64_t seed) {
  if (!(t_end > 0.0) || !(delta > 0.0) || !(sigma >= 0.0)) {
    throw std::invalid_argument("simulate_sine_dataset: bad parameters");
  }
  const DiffusionModel model = make_sine_model();
  Dataset ds;
  ds.regime = Regime::noisy;
  ds.model = "sine";
  ds.seed = seed;
  ds.params = {{"t_end", t_end}, {"delta", delta}, {"sigma", sigma}};

  RngStream rng(derive_seed(seed, 11, 0, 0));
  double x = rng.normal(0.0, 1.0);
  ds.latent.emplace_back(0.0, x);
  const auto n_obs = static_cast<std::size_t>(std::llround(t_end / delta));
  for (std::size_t i = 1; i <= n_obs; ++i) {
    x = exact_propagate(model, x, delta, rng);
    ds.latent.emplace_back(i * delta, x);
    Observation o;
    o.time = i * delta;
    o.regime = Regime::noisy;
    o.value = x + sigma * rng.normal();
    ds.observations.push_back(o);
  }
  return ds;
}

Dataset simulate_cox_dataset(double intensity_offset, double intensity_slope,
                             double rho, double t_end, double grid_dt,
                             std::uint64_t seed) {
  if (!(rho > 0.0) || !(t_end > 0.0) || !(grid_dt > 0.0) ||
      intensity_offset < 0.0 || intensity_slope < 0.0) {
    throw std::invalid_argument("simulate_cox_dataset: bad parameters");
  }
  double dt = grid_dt;
  for (int attempt = 0; attempt < 12; ++attempt) {
    RngStream rng(derive_seed(seed, 13, static_cast<std::uint64_t>(attempt), 0));
    CoxAttempt run = simulate_cox_attempt(intensity_offset, intensity_slope,
                                          rho, t_end, dt, rng);
    if (run.bound_violated) {
      dt *= 0.5;  // bound breached mid-cell: tighten the grid and redo
      continue;
    }
    Dataset ds;
    ds.regime = Regime::point_process;
    ds.model = (intensity_offset > 0.0 || intensity_slope > 0.0) ? "ou_cox"
                                                                 : "ou";
    ds.seed = seed;
    ds.params = {{"a", intensity_offset},
                 {"beta", intensity_slope},
                 {"rho", rho},
                 {"t_end", t_end},
                 {"grid_dt", dt}};
    ds.observations = std::move(run.events);
    ds.latent = std::move(run.latent);
    std::sort(ds.latent.begin(), ds.latent.end());
    return ds;
  }
  throw std::runtime_error(
      "simulate_cox_dataset: intensity bound kept failing after refinement");
}

Dataset simulate_ou_dataset(double rho, double sigma, double delta,
                            std::size_t n_obs, std::uint64_t seed) {
  if (!(rho > 0.0) || !(sigma > 0.0) || !(delta > 0.0) || n_obs == 0) {
    throw std::invalid_argument("simulate_ou_dataset: bad parameters");
  }
  Dataset ds;
  ds.regime = Regime::noisy;
  ds.model = "ou";
  ds.seed = seed;
  ds.params = {{"rho", rho},
               {"sigma", sigma},
               {"delta", delta},
               {"n_obs", static_cast<double>(n_obs)}};

  RngStream rng(derive_seed(seed, 17, 0, 0));
  const double decay = std::exp(-rho * delta);
  const double step_sd =
      std::sqrt(-std::expm1(-2.0 * rho * delta) / (2.0 * rho));
  double x = rng.normal(0.0, std::sqrt(1.0 / (2.0 * rho)));
  ds.latent.emplace_back(0.0, x);
  for (std::size_t i = 1; i <= n_obs; ++i) {
    x = rng.normal(x * decay, step_sd);
    ds.latent.emplace_back(i * delta, x);
    Observation o;
    o.time = i * delta;
    o.regime = Regime::noisy;
    o.value = x + sigma * rng.normal();
    ds.observations.push_back(o);
  }
  return ds;
}

void write_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_dataset: cannot open " + path);
  f << "regime=" << regime_name(ds.regime) << " model=" << ds.model
    << " seed=" << ds.seed;
  for (const auto& [key, value] : ds.params) {
    f << ' ' << key << '=' << format_double(value);
  }
  f << '\n';
  for (const auto& o : ds.observations) {
    f << format_double(o.time) << ',';
    if (std::isfinite(o.value)) f << format_double(o.value);
    f << ',' << (o.is_pseudo ? 1 : 0) << '\n';
  }
  if (!f) throw std::runtime_error("write_dataset: write failed for " + path);

  std::ofstream ft(path + ".truth");
  if (!ft) {
    throw std::runtime_error("write_dataset: cannot open " + path + ".truth");
  }
  for (const auto& [time, value] : ds.latent) {
    ft << format_double(time) << ',' << format_double(value) << '\n';
  }
}

Dataset read_dataset(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_dataset: cannot open " + path);
  Dataset ds;
  std::string header;
  if (!std::getline(f, header)) {
    throw std::runtime_error("read_dataset: missing header in " + path);
  }
  std::istringstream hs(header);
  std::string token;
  while (hs >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("read_dataset: bad header token '" + token + "'");
    }
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "regime") {
      ds.regime = regime_from_name(value);
    } else if (key == "model") {
      ds.model = value;
    } else if (key == "seed") {
      ds.seed = std::stoull(value);
    } else {
      ds.params[key] = parse_double(value);
    }
  }
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw std::runtime_error("read_dataset: bad record '" + line + "'");
    }
    Observation o;
    o.time = parse_double(std::string_view(line).substr(0, c1));
    const auto value_field = std::string_view(line).substr(c1 + 1, c2 - c1 - 1);
    if (!value_field.empty()) o.value = parse_double(value_field);
    o.is_pseudo = line.substr(c2 + 1) == "1";
    o.regime = ds.regime;
    ds.observations.push_back(o);
  }

  std::ifstream ft(path + ".truth");
  if (ft) {
    while (std::getline(ft, line)) {
      if (line.empty()) continue;
      const auto c1 = line.find(',');
      if (c1 == std::string::npos) {
        throw std::runtime_error("read_dataset: bad truth record '" + line +
                                 "'");
      }
      ds.latent.emplace_back(
          parse_double(std::string_view(line).substr(0, c1)),
          parse_double(std::string_view(line).substr(c1 + 1)));
    }
  }
  return ds;
}

double latent_at(const Dataset& ds, double time) {
  if (ds.latent.empty()) {
    throw std::runtime_error("latent_at: dataset has no latent record");
  }
  auto it = std::lower_bound(
      ds.latent.begin(), ds.latent.end(), time,
      [](const std::pair<double, double>& p, double t) { return p.first < t; });
  if (it == ds.latent.end()) return ds.latent.back().second;
  if (it == ds.latent.begin() || it->first == time) return it->second;
  const auto prev = std::prev(it);
  const double w = (time - prev->first) / (it->first - prev->first);
  return prev->second + w * (it->second - prev->second);
}

DiffusionModel model_for_dataset(const Dataset& ds) {
  auto param = [&](const std::string& key, double fallback) {
    auto it = ds.params.find(key);
    return it == ds.params.end() ? fallback : it->second;
  };
  if (ds.model == "sine") return make_sine_model();
  if (ds.model == "ou") return make_ou_model(param("rho", 0.5));
  if (ds.model == "ou_cox") {
    return make_ou_model(param("rho", 0.5), param("a", 0.0),
                         param("beta", 20.0));
  }
  throw std::runtime_error("model_for_dataset: unknown model '" + ds.model +
                           "'");
}

}  // namespace rwpf
