#pragma once

// Markovian SIR with demography (births of susceptibles at rate mu n,
// per-capita death rate mu in every compartment).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "episim/errors.hpp"
#include "episim/parallel.hpp"
#include "episim/rng.hpp"

namespace episim {

struct endemic_params {
  std::size_t n = 0;   ///< population scale
  double lambda = 0.0; ///< contact rate
  double gamma = 0.0;  ///< recovery rate
  double mu = 0.0;     ///< birth and death rate

  void validate() const {
    EPISIM_REQUIRE(n >= 1);
    EPISIM_REQUIRE(lambda > 0.0 && gamma > 0.0 && mu > 0.0);
  }
  double delta() const { return mu / (gamma + mu); }
  double r0() const { return lambda / (gamma + mu); }
};

struct endemic_fractions {
  double s, i, r;
};

/// Interior equilibrium (1/R0, delta (R0 - 1)/R0, 1 - s - i).
inline endemic_fractions endemic_equilibrium(const endemic_params& p) {
  p.validate();
  const double r0 = p.r0();
  if (r0 <= 1.0) throw precondition_error("R0 > 1 (only the disease-free equilibrium exists)");
  const double s = 1.0 / r0;
  const double i = p.delta() * (r0 - 1.0) / r0;
  return {s, i, 1.0 - s - i};
}

/// Right-hand side of the deterministic system with demography.
inline std::array<double, 3> endemic_derivatives(const endemic_params& p, const endemic_fractions& x) {
  const double inf = p.lambda * x.s * x.i;
  return {p.mu - inf - p.mu * x.s, inf - p.gamma * x.i - p.mu * x.i, p.gamma * x.i - p.mu * x.r};
}

struct endemic_point {
  double t;
  endemic_fractions x;
};

inline std::vector<endemic_point> deterministic_endemic_trajectory(const endemic_params& p,
                                                                   endemic_fractions initial, double t_end,
                                                                   double step = 1e-2,
                                                                   double record_interval = 1.0) {
  p.validate();
  if (!(step > 0.0)) throw precondition_error("step > 0");
  EPISIM_REQUIRE(std::abs(initial.s + initial.i + initial.r - 1.0) < 1e-9);
  EPISIM_REQUIRE(t_end >= 0.0);

  std::vector<endemic_point> out{{0.0, initial}};
  endemic_fractions x = initial;
  auto add = [](const endemic_fractions& a, const std::array<double, 3>& d, double h) {
    return endemic_fractions{a.s + h * d[0], a.i + h * d[1], a.r + h * d[2]};
  };
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / step - 1e-9));
  const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(record_interval / step)));
  double t = 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double h = std::min(step, t_end - t);
    const auto k1 = endemic_derivatives(p, x);
    const auto k2 = endemic_derivatives(p, add(x, k1, 0.5 * h));
    const auto k3 = endemic_derivatives(p, add(x, k2, 0.5 * h));
    const auto k4 = endemic_derivatives(p, add(x, k3, h));
    x.s += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
    x.i += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
    x.r += h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]);
    t = k == steps ? t_end : static_cast<double>(k) * step;
    if (k % stride == 0 || k == steps) out.push_back({t, x});
  }
  return out;
}

struct endemic_counts {
  std::size_t s = 0, i = 0, r = 0;
};

/// Integer state near the endemic level: rounds (n s, n i, n r).
inline endemic_counts start_at_equilibrium(const endemic_params& p) {
  const auto eq = endemic_equilibrium(p);
  const double nn = static_cast<double>(p.n);
  if (eq.i * nn < 1.0) throw precondition_error("n * i_hat >= 1 (endemic start impossible at this scale)");
  return {static_cast<std::size_t>(std::llround(eq.s * nn)), static_cast<std::size_t>(std::llround(eq.i * nn)),
          static_cast<std::size_t>(std::llround(eq.r * nn))};
}

struct endemic_sample {
  double t;
  endemic_counts c;
};

struct endemic_run {
  std::optional<double> extinction_time; ///< first time with I = 0
  double observed_until = 0.0;           ///< end of the simulated window
  double mean_infective_fraction = 0.0;  ///< time average of I/n up to extinction (or t_max)
  double mean_population = 0.0;          ///< time average of S+I+R over the simulated window
  endemic_counts final;
  std::vector<endemic_sample> trajectory;
};

struct endemic_run_options {
  bool stop_at_extinction = true;
  bool record = false;
  double record_interval = 0.0; ///< 0 records every event
};

/// Exact CTMC simulation by exponential races over six channels: birth
/// (mu n), infection (lambda S I / n), recovery (gamma I), and deaths
/// (mu S, mu I, mu R).
template <class Rng>
endemic_run simulate_endemic(const endemic_params& p, endemic_counts start, double t_max, Rng& rng,
                             const endemic_run_options& opt = {}) {
  p.validate();
  EPISIM_REQUIRE(t_max >= 0.0);
  const double nn = static_cast<double>(p.n);
  endemic_run out;
  endemic_counts c = start;
  double t = 0.0, area_i = 0.0, area_n = 0.0, area_i_until = 0.0;
  double next_record = 0.0;
  auto record = [&](double now) {
    if (!opt.record) return;
    if (opt.record_interval <= 0.0) {
      out.trajectory.push_back({now, c});
      return;
    }
    while (next_record <= now && next_record <= t_max) {
      out.trajectory.push_back({next_record, c});
      next_record += opt.record_interval;
    }
  };
  if (c.i == 0) out.extinction_time = 0.0;
  if (opt.record && opt.record_interval <= 0.0) out.trajectory.push_back({0.0, c});

  while (t < t_max) {
    if (c.i == 0 && opt.stop_at_extinction) break;
    const double birth = p.mu * nn;
    const double infection = p.lambda * static_cast<double>(c.s) * static_cast<double>(c.i) / nn;
    const double recovery = p.gamma * static_cast<double>(c.i);
    const double death_s = p.mu * static_cast<double>(c.s);
    const double death_i = p.mu * static_cast<double>(c.i);
    const double death_r = p.mu * static_cast<double>(c.r);
    const double total = birth + infection + recovery + death_s + death_i + death_r;
    const double dt = sample_exponential(rng, total);
    const double t_next = std::min(t + dt, t_max);
    if (opt.record_interval > 0.0) record(t_next);
    area_i += static_cast<double>(c.i) * (t_next - t);
    area_n += static_cast<double>(c.s + c.i + c.r) * (t_next - t);
    t = t_next;
    if (t >= t_max) break;

    double u = uniform01(rng) * total;
    if ((u -= birth) < 0) {
      ++c.s;
    } else if ((u -= infection) < 0) {
      --c.s;
      ++c.i;
    } else if ((u -= recovery) < 0) {
      --c.i;
      ++c.r;
    } else if ((u -= death_s) < 0) {
      --c.s;
    } else if ((u -= death_i) < 0) {
      --c.i;
    } else if (c.r > 0) {
      --c.r;
    }
    if (c.i == 0 && !out.extinction_time) {
      out.extinction_time = t;
      area_i_until = area_i;
    }
    if (opt.record && opt.record_interval <= 0.0) out.trajectory.push_back({t, c});
  }
  out.observed_until = t;
  const double horizon = out.extinction_time ? *out.extinction_time : t;
  const double ai = out.extinction_time ? area_i_until : area_i;
  out.mean_infective_fraction = horizon > 0.0 ? ai / (nn * horizon) : 0.0;
  out.mean_population = t > 0.0 ? area_n / t : static_cast<double>(c.s + c.i + c.r);
  out.final = c;
  return out;
}

struct extinction_summary {
  double median = 0.0;
  double lower_quartile = 0.0;
  double upper_quartile = 0.0;
  double censored_fraction = 0.0; ///< runs still infected at t_cap (their time counts as t_cap)
  std::vector<double> times;
};

inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(sorted.size() - 1, lo + 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline extinction_summary time_to_extinction_mc(const endemic_params& p, endemic_counts start, std::size_t reps,
                                                std::uint64_t master_seed, double t_cap, unsigned threads = 0) {
  EPISIM_REQUIRE(reps >= 100);
  EPISIM_REQUIRE(t_cap > 0.0);
  auto runs = run_replicates<double>(
      reps, master_seed,
      [&] {
        return [&](stream& rng, std::size_t) {
          const auto r = simulate_endemic(p, start, t_cap, rng);
          return r.extinction_time ? *r.extinction_time : std::numeric_limits<double>::infinity();
        };
      },
      threads);
  extinction_summary out;
  std::size_t censored = 0;
  for (double& t : runs) {
    if (!std::isfinite(t)) {
      ++censored;
      t = t_cap;
    }
  }
  std::sort(runs.begin(), runs.end());
  out.median = sorted_quantile(runs, 0.5);
  out.lower_quartile = sorted_quantile(runs, 0.25);
  out.upper_quartile = sorted_quantile(runs, 0.75);
  out.censored_fraction = static_cast<double>(censored) / static_cast<double>(reps);
  out.times = std::move(runs);
  return out;
}

struct quasi_stationary_estimate {
  std::size_t reps = 0;
  std::size_t surviving = 0;  ///< runs with I > 0 throughout [0, horizon]
  double surviving_mean = 0;  ///< mean over surviving runs of their time-average I/n (NaN if none)
  double alive_mean = 0;      ///< time-average I/n pooled over every run's infected period
};

/// Time-averaged infective fraction of runs conditioned on survival to
/// `horizon`, plus the pooled average over the time each run stays infected.
inline quasi_stationary_estimate quasi_stationary_average(const endemic_params& p, endemic_counts start,
                                                          double horizon, std::size_t reps,
                                                          std::uint64_t master_seed, unsigned threads = 0) {
  EPISIM_REQUIRE(reps >= 1);
  EPISIM_REQUIRE(horizon > 0.0);
  struct one {
    bool survived;
    double fraction, alive;
  };
  const auto runs = run_replicates<one>(
      reps, master_seed,
      [&] {
        return [&](stream& rng, std::size_t) {
          const auto r = simulate_endemic(p, start, horizon, rng);
          return one{!r.extinction_time, r.mean_infective_fraction,
                     r.extinction_time ? *r.extinction_time : horizon};
        };
      },
      threads);
  quasi_stationary_estimate out;
  out.reps = reps;
  double sum = 0.0, area = 0.0, time = 0.0;
  for (const auto& r : runs) {
    area += r.fraction * r.alive;
    time += r.alive;
    if (!r.survived) continue;
    ++out.surviving;
    sum += r.fraction;
  }
  out.surviving_mean = out.surviving ? sum / static_cast<double>(out.surviving) : std::numeric_limits<double>::quiet_NaN();
  out.alive_mean = time > 0.0 ? area / time : 0.0;
  return out;
}

} // namespace episim
