#pragma once

// Two-level mixing: households of size <= 10 with within-household per-pair
// rate lambda_H, and global contacts at rate lambda_G uniform over everyone.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "episim/dists.hpp"
#include "episim/errors.hpp"
#include "episim/exact.hpp"
#include "episim/parallel.hpp"
#include "episim/rng.hpp"
#include "episim/sim.hpp"

namespace episim {

inline constexpr std::size_t kMaxHouseholdSize = 10;

struct household_params {
  std::vector<double> size_pmf; ///< size_pmf[h-1] = P(household size = h)
  double lambda_h = 0.0;        ///< per-pair contact rate within a household
  double lambda_g = 0.0;        ///< global contact rate of one infective
  duration_distribution period = duration_distribution::exponential(1.0);

  void validate() const {
    EPISIM_REQUIRE(!size_pmf.empty() && size_pmf.size() <= kMaxHouseholdSize);
    double total = 0.0;
    for (double x : size_pmf) {
      EPISIM_REQUIRE(x >= 0.0);
      total += x;
    }
    EPISIM_REQUIRE(std::abs(total - 1.0) < 1e-9);
    EPISIM_REQUIRE(lambda_h >= 0.0 && lambda_g >= 0.0);
  }
};

/// Size-biased household pmf h pi(h) / sum g pi(g).
inline std::vector<double> size_biased_pmf(const std::vector<double>& size_pmf) {
  double mean = 0.0;
  for (std::size_t h = 1; h <= size_pmf.size(); ++h) mean += static_cast<double>(h) * size_pmf[h - 1];
  if (!(mean > 0.0)) throw precondition_error("household size pmf has positive mean");
  std::vector<double> out(size_pmf.size());
  for (std::size_t h = 1; h <= size_pmf.size(); ++h) out[h - 1] = static_cast<double>(h) * size_pmf[h - 1] / mean;
  return out;
}

/// Mean size of a household outbreak started by one case, including that
/// case, with the household drawn size-biased.
inline double household_outbreak_mean(const household_params& p) {
  p.validate();
  const auto biased = size_biased_pmf(p.size_pmf);
  double mu = 0.0;
  for (std::size_t h = 1; h <= biased.size(); ++h) {
    if (biased[h - 1] == 0.0) continue;
    const auto pmf = final_size_pmf_pairwise(h, 1, p.lambda_h, p.period);
    mu += biased[h - 1] * (1.0 + pmf.mean());
  }
  return mu;
}

/// Household reproduction number lambda_G E(I) mu_H.
inline double household_r0(const household_params& p) {
  return p.lambda_g * p.period.mean() * household_outbreak_mean(p);
}

struct household_outcome {
  outbreak_result outbreak;
  std::size_t population = 0;
  /// households_by_generation[g]: households whose first case came from a
  /// household of generation g-1 (generation 0: households of initial cases).
  std::vector<std::size_t> households_by_generation;
  /// children_by_generation[g]: households infected from generation-g households.
  std::vector<std::size_t> children_by_generation;
};

class household_simulator {
public:
  template <class Rng>
  household_outcome run(const household_params& p, std::size_t n_households, std::size_t m, Rng& rng) {
    p.validate();
    EPISIM_REQUIRE(n_households >= 1);

    // Household composition.
    std::discrete_distribution<std::size_t> size_draw(p.size_pmf.begin(), p.size_pmf.end());
    start_.assign(n_households + 1, 0);
    for (std::size_t h = 0; h < n_households; ++h) start_[h + 1] = start_[h] + size_draw(rng) + 1;
    const std::size_t n = start_.back();
    EPISIM_REQUIRE(m >= 1 && m <= n);
    home_.resize(n);
    for (std::size_t h = 0; h < n_households; ++h)
      std::fill(home_.begin() + static_cast<long>(start_[h]), home_.begin() + static_cast<long>(start_[h + 1]),
                static_cast<std::uint32_t>(h));
    susceptible_.assign(n, 1);
    generation_.assign(n_households, -1);
    queue_.clear();

    household_outcome out;
    out.population = n;
    n_ = n;

    // m distinct uniformly chosen individuals (partial Fisher-Yates).
    pool_.resize(n);
    std::iota(pool_.begin(), pool_.end(), 0u);
    for (std::size_t c = 0; c < m; ++c) {
      const std::size_t pick = c + uniform_index(rng, n - c);
      std::swap(pool_[c], pool_[pick]);
      const std::uint32_t who = pool_[c];
      mark_household(out, home_[who], 0, -1);
      infect(p, rng, who, 0.0, out);
    }

    while (!queue_.empty()) {
      std::pop_heap(queue_.begin(), queue_.end(), later);
      const event ev = queue_.back();
      queue_.pop_back();
      if (ev.kind == event_kind::recovery) {
        out.outbreak.extinction_time = ev.t;
        continue;
      }
      const std::uint32_t target =
          ev.kind == event_kind::global ? static_cast<std::uint32_t>(uniform_index(rng, n_)) : ev.target;
      if (!susceptible_[target]) continue;
      ++out.outbreak.final_size;
      const std::uint32_t hh = home_[target];
      if (generation_[hh] < 0) {
        const int parent_gen = generation_[home_[ev.source]];
        mark_household(out, hh, parent_gen + 1, parent_gen);
      }
      infect(p, rng, target, ev.t, out);
    }
    return out;
  }

private:
  enum class event_kind : std::uint8_t { global, local, recovery };
  struct event {
    double t;
    std::uint32_t source;
    std::uint32_t target;
    event_kind kind;
  };
  static bool later(const event& a, const event& b) { return a.t > b.t; }

  void push(const event& e) {
    queue_.push_back(e);
    std::push_heap(queue_.begin(), queue_.end(), later);
  }

  void mark_household(household_outcome& out, std::uint32_t hh, int gen, int parent_gen) {
    generation_[hh] = gen;
    const auto g = static_cast<std::size_t>(gen);
    if (out.households_by_generation.size() <= g) out.households_by_generation.resize(g + 1, 0);
    ++out.households_by_generation[g];
    if (parent_gen >= 0) {
      const auto pg = static_cast<std::size_t>(parent_gen);
      if (out.children_by_generation.size() <= pg) out.children_by_generation.resize(pg + 1, 0);
      ++out.children_by_generation[pg];
    }
  }

  template <class Rng>
  void infect(const household_params& p, Rng& rng, std::uint32_t who, double t, household_outcome& out) {
    susceptible_[who] = 0;
    const double d = p.period.sample(rng);
    out.outbreak.total_infectious_time += d;
    if (p.lambda_g > 0.0 && d > 0.0) {
      std::poisson_distribution<long> contacts(p.lambda_g * d);
      const long c = contacts(rng);
      for (long e = 0; e < c; ++e) push({t + uniform01(rng) * d, who, 0, event_kind::global});
    }
    // Only the first contact with each housemate can transmit.
    if (p.lambda_h > 0.0) {
      const std::uint32_t hh = home_[who];
      for (std::size_t mate = start_[hh]; mate < start_[hh + 1]; ++mate) {
        if (mate == who) continue;
        const double first = sample_exponential(rng, p.lambda_h);
        if (first < d) push({t + first, who, static_cast<std::uint32_t>(mate), event_kind::local});
      }
    }
    push({t + d, who, 0, event_kind::recovery});
  }

  std::size_t n_ = 0;
  std::vector<std::size_t> start_;
  std::vector<std::uint32_t> home_, pool_;
  std::vector<std::uint8_t> susceptible_;
  std::vector<int> generation_;
  std::vector<event> queue_;
};

template <class Rng>
household_outcome simulate_households(const household_params& p, std::size_t n_households, std::size_t m, Rng& rng) {
  household_simulator sim;
  return sim.run(p, n_households, m, rng);
}

inline std::vector<household_outcome> simulate_household_replicates(const household_params& p,
                                                                    std::size_t n_households, std::size_t m,
                                                                    std::size_t reps, std::uint64_t master_seed,
                                                                    unsigned threads = 0) {
  return run_replicates<household_outcome>(
      reps, master_seed,
      [&] {
        return [&, sim = household_simulator{}](stream& rng, std::size_t) mutable {
          return sim.run(p, n_households, m, rng);
        };
      },
      threads);
}

} // namespace episim
