#pragma once

// Stochastic simulation of the standard SIR epidemic in a closed, uniformly
// mixing community: an exact event-driven engine (with optional latent
// period and vaccination), the Sellke construction, the Reed-Frost random
// graph, and Monte Carlo campaigns on counter-based replicate streams.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "episim/asymp.hpp"
#include "episim/dists.hpp"
#include "episim/errors.hpp"
#include "episim/parallel.hpp"
#include "episim/policy.hpp"
#include "episim/rng.hpp"

namespace episim {

struct epidemic_params {
  std::size_t n = 0;  ///< community size
  std::size_t m = 1;  ///< initial infectives
  double lambda = 0;  ///< contact rate of one infective (targets uniform over all n)
  duration_distribution infectious_period = duration_distribution::exponential(1.0);
  std::optional<duration_distribution> latent_period;
  std::optional<vaccination_policy> vaccination;

  void validate() const {
    EPISIM_REQUIRE(m >= 1 && m <= n);
    EPISIM_REQUIRE(lambda > 0.0);
    if (vaccination) vaccination->validate();
  }

  double r0() const { return lambda * infectious_period.mean(); }

  /// Reproduction number after vaccination: (1 - v e) R0.
  double effective_r() const {
    return vaccination ? (1.0 - vaccination->susceptibility_reduction()) * r0() : r0();
  }

  /// Number of individuals vaccinated: ceil(n v), at most n - m.
  std::size_t vaccinated_count() const {
    if (!vaccination) return 0;
    const double raw = std::ceil(static_cast<double>(n) * vaccination->coverage - 1e-9);
    return std::min<std::size_t>(n - m, static_cast<std::size_t>(std::max(0.0, raw)));
  }
};

struct outbreak_result {
  std::size_t final_size = 0;       ///< infected excluding the m initial infectives
  double extinction_time = 0.0;     ///< first time with no infectives or latents left
  std::size_t peak_infectives = 0;
  double total_infectious_time = 0; ///< sum of infectious periods of everyone ever infected
  bool is_major = false;
};

/// Compartment counts after an event. Vaccinated immune individuals are
/// counted as removed.
struct compartment_counts {
  double t;
  std::size_t s, e, i, r;
};

/// Event-driven engine for the standard model. Keeps scratch buffers between
/// calls, so one instance per thread is the intended use.
class outbreak_simulator {
public:
  template <class Rng>
  outbreak_result run(const epidemic_params& p, Rng& rng,
                      std::size_t major_threshold = std::numeric_limits<std::size_t>::max(),
                      std::vector<compartment_counts>* log = nullptr) {
    p.validate();
    n_ = p.n;
    state_.assign(p.n, state::susceptible);
    queue_.clear();
    counts_ = {0.0, p.n - p.m, 0, 0, 0};
    leaky_pass_ = 1.0;

    const std::size_t vaccinated = p.vaccinated_count();
    if (vaccinated > 0) {
      const auto& v = *p.vaccination;
      for (std::size_t j = p.m; j < p.m + vaccinated; ++j) {
        if (v.mode == vaccine_mode::leaky) {
          state_[j] = state::susceptible_leaky;
        } else if (v.efficacy >= 1.0 || uniform01(rng) < v.efficacy) {
          state_[j] = state::removed;
          --counts_.s;
          ++counts_.r;
        }
      }
      leaky_pass_ = 1.0 - v.efficacy;
    }

    outbreak_result out;
    for (std::size_t j = 0; j < p.m; ++j) start_infectious(p, rng, static_cast<std::uint32_t>(j), 0.0, out);
    if (log) {
      log->clear();
      log->push_back(counts_);
    }

    while (!queue_.empty()) {
      std::pop_heap(queue_.begin(), queue_.end(), later);
      const event ev = queue_.back();
      queue_.pop_back();
      counts_.t = ev.t;
      bool changed = true;
      switch (ev.kind) {
      case event_kind::contact: {
        const auto target = static_cast<std::uint32_t>(uniform_index(rng, n_));
        const state st = state_[target];
        if (st == state::susceptible ||
            (st == state::susceptible_leaky && uniform01(rng) < leaky_pass_)) {
          ++out.final_size;
          --counts_.s;
          if (p.latent_period) {
            state_[target] = state::exposed;
            ++counts_.e;
            push(ev.t + p.latent_period->sample(rng), target, event_kind::latent_end);
          } else {
            start_infectious(p, rng, target, ev.t, out);
          }
        } else {
          changed = false;
        }
        break;
      }
      case event_kind::latent_end:
        --counts_.e;
        start_infectious(p, rng, ev.who, ev.t, out);
        break;
      case event_kind::recovery:
        state_[ev.who] = state::removed;
        --counts_.i;
        ++counts_.r;
        out.extinction_time = ev.t;
        break;
      }
      if (log && changed) log->push_back(counts_);
    }
    out.is_major = out.final_size >= major_threshold;
    return out;
  }

private:
  enum class state : std::uint8_t { susceptible, susceptible_leaky, exposed, infectious, removed };
  enum class event_kind : std::uint8_t { contact, latent_end, recovery };
  struct event {
    double t;
    std::uint32_t who;
    event_kind kind;
  };
  static bool later(const event& a, const event& b) { return a.t > b.t; }

  void push(double t, std::uint32_t who, event_kind kind) {
    queue_.push_back({t, who, kind});
    std::push_heap(queue_.begin(), queue_.end(), later);
  }

  // Contacts during an infectious period of length D form a Poisson process
  // of rate lambda: Poisson(lambda D) contacts at uniform times.
  template <class Rng>
  void start_infectious(const epidemic_params& p, Rng& rng, std::uint32_t who, double t,
                        outbreak_result& out) {
    state_[who] = state::infectious;
    ++counts_.i;
    out.peak_infectives = std::max(out.peak_infectives, counts_.i);
    const double d = p.infectious_period.sample(rng);
    out.total_infectious_time += d;
    const double mean_contacts = p.lambda * d;
    if (mean_contacts > 0.0) {
      std::poisson_distribution<long> contacts(mean_contacts);
      const long k = contacts(rng);
      for (long c = 0; c < k; ++c) push(t + uniform01(rng) * d, who, event_kind::contact);
    }
    push(t + d, who, event_kind::recovery);
  }

  std::size_t n_ = 0;
  std::vector<state> state_;
  std::vector<event> queue_;
  compartment_counts counts_{};
  double leaky_pass_ = 1.0;
};

template <class Rng>
outbreak_result simulate_outbreak(const epidemic_params& p, Rng& rng,
                                  std::size_t major_threshold = std::numeric_limits<std::size_t>::max()) {
  outbreak_simulator sim;
  return sim.run(p, rng, major_threshold);
}

/// Sellke construction: susceptibles carry Exp(1) resistances and become
/// infected once the accumulated pressure (lambda/n) * sum of infectious
/// periods of the infected exceeds their resistance.
class sellke_simulator {
public:
  template <class Rng> std::size_t run(const epidemic_params& p, Rng& rng) {
    p.validate();
    if (p.vaccination) throw precondition_error("Sellke construction without vaccination");
    const std::size_t susceptibles = p.n - p.m;
    resistance_.resize(susceptibles);
    for (auto& q : resistance_) q = sample_exponential(rng, 1.0);
    std::sort(resistance_.begin(), resistance_.end());

    const double per_capita = p.lambda / static_cast<double>(p.n);
    double pressure = 0.0;
    for (std::size_t j = 0; j < p.m; ++j) pressure += per_capita * p.infectious_period.sample(rng);
    std::size_t infected = 0;
    while (infected < susceptibles && resistance_[infected] <= pressure) {
      pressure += per_capita * p.infectious_period.sample(rng);
      ++infected;
    }
    return infected;
  }

private:
  std::vector<double> resistance_;
};

template <class Rng> std::size_t simulate_sellke(const epidemic_params& p, Rng& rng) {
  sellke_simulator sim;
  return sim.run(p, rng);
}

/// Final size of the Reed-Frost epidemic on an Erdos-Renyi graph G(n, p)
/// with p = 1 - exp(-lambda / (n gamma)): the size of the set reachable from
/// the m seeds, minus m. The graph is revealed lazily during the search;
/// each vertex pair is examined at most once, which samples the reachable
/// set exactly.
template <class Rng>
std::size_t simulate_reed_frost_graph(std::size_t n, std::size_t m, double lambda, double gamma,
                                      Rng& rng) {
  EPISIM_REQUIRE(m >= 1 && m <= n);
  EPISIM_REQUIRE(lambda >= 0.0);
  EPISIM_REQUIRE(gamma > 0.0);
  const double edge_p = -std::expm1(-lambda / (static_cast<double>(n) * gamma));
  std::size_t unreached = n - m;
  std::size_t frontier = m;
  while (frontier > 0 && unreached > 0) {
    --frontier;
    std::binomial_distribution<std::size_t> neighbours(unreached, edge_p);
    const std::size_t found = neighbours(rng);
    unreached -= found;
    frontier += found;
  }
  return n - m - unreached;
}

enum class simulator_kind { event_driven, sellke, reed_frost };

/// Runs `reps` replicates on streams (master_seed, i). Sellke and Reed-Frost
/// results carry only the final size (extinction time is NaN).
inline std::vector<outbreak_result> simulate_replicates(const epidemic_params& p, std::size_t reps,
                                                        std::uint64_t master_seed,
                                                        simulator_kind kind = simulator_kind::event_driven,
                                                        unsigned threads = 0) {
  p.validate();
  if (kind == simulator_kind::reed_frost && !p.infectious_period.is_constant())
    throw precondition_error("Reed-Frost graph needs a constant infectious period");
  if (kind != simulator_kind::event_driven && p.vaccination)
    throw precondition_error("vaccination requires the event-driven simulator");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return run_replicates<outbreak_result>(
      reps, master_seed,
      [&] {
        return [&p, kind, nan, ev = outbreak_simulator{}, sk = sellke_simulator{}](stream& rng, std::size_t) mutable {
          switch (kind) {
          case simulator_kind::sellke:
            return outbreak_result{sk.run(p, rng), nan, 0, nan, false};
          case simulator_kind::reed_frost: {
            const double gamma = 1.0 / p.infectious_period.mean();
            return outbreak_result{simulate_reed_frost_graph(p.n, p.m, p.lambda, gamma, rng), nan, 0, nan, false};
          }
          default:
            return ev.run(p, rng);
          }
        };
      },
      threads);
}

/// Threshold separating minor from major outbreaks (major: Z >= threshold).
/// Picks the longest run of empty histogram cells in [1, n z*/2]; without
/// such a gap (or when z* = 0) falls back to ceil(n^(2/3)).
inline std::size_t auto_major_threshold(const std::vector<std::size_t>& histogram, std::size_t n,
                                        double z_star) {
  const auto fallback = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), 2.0 / 3.0)));
  if (!(z_star > 0.0) || histogram.size() < 2) return fallback;
  const auto upper = std::min(histogram.size() - 1,
                              static_cast<std::size_t>(std::floor(static_cast<double>(n) * z_star / 2.0)));
  std::size_t best_start = 0, best_len = 0, run_start = 0, run_len = 0;
  for (std::size_t k = 1; k <= upper; ++k) {
    if (histogram[k] == 0) {
      if (run_len == 0) run_start = k;
      ++run_len;
      if (run_len > best_len) {
        best_len = run_len;
        best_start = run_start;
      }
    } else {
      run_len = 0;
    }
  }
  return best_len == 0 ? fallback : best_start;
}

struct monte_carlo_summary {
  std::size_t reps = 0;
  double minor_fraction = 0.0;
  std::size_t major_count = 0;
  double major_mean = std::numeric_limits<double>::quiet_NaN();
  double major_sd = std::numeric_limits<double>::quiet_NaN();
  double major_mean_duration = std::numeric_limits<double>::quiet_NaN();
  double major_duration_sd = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::size_t> histogram; ///< histogram[k] = replicates with Z = k
  std::size_t threshold_used = 0;
  std::uint64_t master_seed = 0;
};

/// Summarizes replicate outcomes. `major_threshold` = nullopt selects the
/// automatic gap rule.
inline monte_carlo_summary summarize(const epidemic_params& p, const std::vector<outbreak_result>& results,
                                     std::optional<std::size_t> major_threshold, std::uint64_t master_seed) {
  monte_carlo_summary s;
  s.reps = results.size();
  s.master_seed = master_seed;
  s.histogram.assign(p.n - p.m + 1, 0);
  for (const auto& r : results) ++s.histogram[r.final_size];
  s.threshold_used = major_threshold ? *major_threshold
                                     : auto_major_threshold(s.histogram, p.n, final_size_fraction(p.effective_r()));

  double sum = 0, sum_sq = 0, dsum = 0, dsum_sq = 0;
  std::size_t minor = 0;
  for (const auto& r : results) {
    if (r.final_size >= s.threshold_used) {
      const auto z = static_cast<double>(r.final_size);
      sum += z;
      sum_sq += z * z;
      dsum += r.extinction_time;
      dsum_sq += r.extinction_time * r.extinction_time;
      ++s.major_count;
    } else {
      ++minor;
    }
  }
  s.minor_fraction = s.reps ? static_cast<double>(minor) / static_cast<double>(s.reps) : 0.0;
  if (s.major_count > 0) {
    const auto k = static_cast<double>(s.major_count);
    s.major_mean = sum / k;
    s.major_mean_duration = dsum / k;
    if (s.major_count > 1) {
      s.major_sd = std::sqrt(std::max(0.0, (sum_sq - k * s.major_mean * s.major_mean) / (k - 1)));
      s.major_duration_sd =
          std::sqrt(std::max(0.0, (dsum_sq - k * s.major_mean_duration * s.major_mean_duration) / (k - 1)));
    }
  }
  return s;
}

inline monte_carlo_summary run_monte_carlo(const epidemic_params& p, std::size_t reps, std::uint64_t master_seed,
                                           std::optional<std::size_t> major_threshold = std::nullopt,
                                           simulator_kind kind = simulator_kind::event_driven,
                                           unsigned threads = 0) {
  EPISIM_REQUIRE(reps >= 1);
  return summarize(p, simulate_replicates(p, reps, master_seed, kind, threads), major_threshold, master_seed);
}

struct duration_point {
  std::size_t n;
  double mean_t;   ///< mean extinction time over major outbreaks
  double se_t;
  std::size_t majors;
};

struct duration_scaling {
  std::vector<duration_point> points;
  double slope = 0, intercept = 0, r_squared = 0; ///< least squares of mean_t on log n
};

/// Mean duration of major outbreaks for each community size, and the
/// least-squares line of mean duration against log n.
inline duration_scaling duration_scaling_experiment(double lambda, const duration_distribution& period,
                                                    std::size_t m, const std::vector<std::size_t>& n_grid,
                                                    std::size_t reps, std::uint64_t master_seed,
                                                    unsigned threads = 0) {
  if (n_grid.size() < 2) throw precondition_error("n_grid has at least 2 sizes");
  EPISIM_REQUIRE(lambda * period.mean() > 1.0);
  EPISIM_REQUIRE(reps >= 1);

  duration_scaling out;
  for (std::size_t idx = 0; idx < n_grid.size(); ++idx) {
    epidemic_params p;
    p.n = n_grid[idx];
    p.m = m;
    p.lambda = lambda;
    p.infectious_period = period;
    // Each size gets its own block of streams.
    const std::uint64_t seed = master_seed ^ (0x9E3779B97F4A7C15ull * (idx + 1));
    const auto s = run_monte_carlo(p, reps, seed, std::nullopt, simulator_kind::event_driven, threads);
    out.points.push_back({p.n, s.major_mean_duration,
                          s.major_count > 1 ? s.major_duration_sd / std::sqrt(static_cast<double>(s.major_count))
                                            : std::numeric_limits<double>::quiet_NaN(),
                          s.major_count});
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0, k = 0;
  for (const auto& pt : out.points) {
    if (pt.majors == 0) continue;
    const double x = std::log(static_cast<double>(pt.n));
    const double y = pt.mean_t;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    k += 1;
  }
  if (k < 2) throw precondition_error("at least 2 sizes with major outbreaks");
  const double cov = sxy - sx * sy / k;
  const double varx = sxx - sx * sx / k;
  const double vary = syy - sy * sy / k;
  out.slope = cov / varx;
  out.intercept = (sy - out.slope * sx) / k;
  out.r_squared = vary > 0 ? cov * cov / (varx * vary) : 1.0;
  return out;
}

} // namespace episim
