#pragma once

// Multitype epidemics: offspring matrix, Perron-root R0, separable mixing
// and an event-driven multitype simulator.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "episim/dists.hpp"
#include "episim/errors.hpp"
#include "episim/parallel.hpp"
#include "episim/rng.hpp"

namespace episim {

using matrix = std::vector<std::vector<double>>;

struct multitype_params {
  std::vector<double> pi;  ///< type fractions, summing to 1
  matrix lambda;           ///< lambda[i][j]: rate at which an i-infective contacts a given j-individual (times n)
  std::vector<duration_distribution> periods; ///< infectious period of each type

  std::size_t types() const { return pi.size(); }

  void validate() const {
    const std::size_t k = pi.size();
    EPISIM_REQUIRE(k >= 1);
    EPISIM_REQUIRE(lambda.size() == k);
    EPISIM_REQUIRE(periods.size() == k);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      EPISIM_REQUIRE(pi[i] >= 0.0);
      EPISIM_REQUIRE(lambda[i].size() == k);
      for (double x : lambda[i]) EPISIM_REQUIRE(x >= 0.0);
      total += pi[i];
    }
    EPISIM_REQUIRE(std::abs(total - 1.0) < 1e-9);
  }
};

/// m_ij = lambda_ij pi_j E(I_i).
inline matrix mean_offspring_matrix(const multitype_params& p) {
  p.validate();
  const std::size_t k = p.types();
  matrix out(k, std::vector<double>(k));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) out[i][j] = p.lambda[i][j] * p.pi[j] * p.periods[i].mean();
  return out;
}

/// True when the directed graph i -> j (m_ij > 0) is strongly connected.
inline bool is_irreducible(const matrix& m) {
  const std::size_t k = m.size();
  std::vector<std::vector<bool>> reach(k, std::vector<bool>(k));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) reach[i][j] = i == j || m[i][j] > 0.0;
  for (std::size_t via = 0; via < k; ++via)
    for (std::size_t i = 0; i < k; ++i)
      if (reach[i][via])
        for (std::size_t j = 0; j < k; ++j)
          if (reach[via][j]) reach[i][j] = true;
  for (const auto& row : reach)
    for (bool b : row)
      if (!b) return false;
  return true;
}

/// Largest real root of the characteristic polynomial for k <= 3.
inline double charpoly_dominant_root(const matrix& m) {
  const std::size_t k = m.size();
  if (k == 1) return m[0][0];
  if (k == 2) {
    const double tr = m[0][0] + m[1][1];
    const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    return 0.5 * (tr + std::sqrt(std::max(0.0, tr * tr - 4.0 * det)));
  }
  if (k != 3) throw std::invalid_argument("characteristic polynomial route supports k <= 3");
  // x^3 + a x^2 + b x + c
  const double tr = m[0][0] + m[1][1] + m[2][2];
  const double minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0] +
                        m[1][1] * m[2][2] - m[1][2] * m[2][1];
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  const double a = -tr, b = minors, c = -det;
  const double q = (a * a - 3.0 * b) / 9.0;
  const double r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
  if (r * r < q * q * q) {
    const double theta = std::acos(std::clamp(r / std::sqrt(q * q * q), -1.0, 1.0));
    return -2.0 * std::sqrt(q) * std::cos((theta + 2.0 * M_PI) / 3.0) - a / 3.0;
  }
  const double s = -std::copysign(std::cbrt(std::abs(r) + std::sqrt(r * r - q * q * q)), r);
  const double t = s == 0.0 ? 0.0 : q / s;
  return s + t - a / 3.0;
}

struct perron_result {
  double r0;
  bool reducible;
  std::size_t iterations;
  std::optional<double> charpoly_r0; ///< independent value for k <= 3
};

/// Dominant eigenvalue of a nonnegative matrix by power iteration on M + I
/// (the shift makes every irreducible M primitive), uniform start vector.
inline perron_result dominant_eigenvalue(const matrix& m, double tol = 1e-10, std::size_t max_iter = 1000000) {
  const std::size_t k = m.size();
  EPISIM_REQUIRE(k >= 1);
  for (const auto& row : m) {
    EPISIM_REQUIRE(row.size() == k);
    for (double x : row) EPISIM_REQUIRE(x >= 0.0);
  }
  std::vector<double> x(k, 1.0 / static_cast<double>(k)), y(k);
  double estimate = 0.0;
  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    for (std::size_t i = 0; i < k; ++i) {
      double acc = x[i];
      for (std::size_t j = 0; j < k; ++j) acc += m[i][j] * x[j];
      y[i] = acc;
    }
    const double norm = std::accumulate(y.begin(), y.end(), 0.0);
    double change = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      y[i] /= norm;
      change = std::max(change, std::abs(y[i] - x[i]));
    }
    const double next = norm - 1.0; // x sums to 1, so ||(M+I)x||_1 - 1
    const bool settled = std::abs(next - estimate) <= tol * std::max(1.0, std::abs(next)) && change <= tol;
    estimate = next;
    x.swap(y);
    if (settled && it > 0) break;
  }
  if (it == max_iter) throw convergence_error("power iteration did not converge");
  perron_result out{estimate, k > 1 && !is_irreducible(m), it + 1, std::nullopt};
  if (k <= 3) out.charpoly_r0 = charpoly_dominant_root(m);
  return out;
}

inline perron_result r0_multitype(const multitype_params& p) { return dominant_eigenvalue(mean_offspring_matrix(p)); }

/// R0 under separable mixing m_ij = alpha_i beta_j pi_j: sum alpha_i beta_i pi_i.
inline double r0_separable(const std::vector<double>& alpha, const std::vector<double>& beta,
                           const std::vector<double>& pi) {
  if (alpha.size() != beta.size() || alpha.size() != pi.size())
    throw std::invalid_argument("r0_separable: alpha, beta and pi must have equal lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) s += alpha[i] * beta[i] * pi[i];
  return s;
}

inline matrix separable_matrix(const std::vector<double>& alpha, const std::vector<double>& beta,
                               const std::vector<double>& pi) {
  if (alpha.size() != beta.size() || alpha.size() != pi.size())
    throw std::invalid_argument("separable_matrix: alpha, beta and pi must have equal lengths");
  const std::size_t k = alpha.size();
  matrix m(k, std::vector<double>(k));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) m[i][j] = alpha[i] * beta[j] * pi[j];
  return m;
}

/// round(n pi_j) adjusted by largest remainders so the counts sum to n.
inline std::vector<std::size_t> type_counts(std::size_t n, const std::vector<double>& pi) {
  const std::size_t k = pi.size();
  std::vector<std::size_t> counts(k);
  std::vector<double> remainder(k);
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < k; ++j) {
    const double exact = static_cast<double>(n) * pi[j];
    counts[j] = static_cast<std::size_t>(std::floor(exact));
    remainder[j] = exact - std::floor(exact);
    assigned += counts[j];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return remainder[a] > remainder[b]; });
  for (std::size_t r = 0; assigned < n; ++r, ++assigned) ++counts[order[r % k]];
  return counts;
}

struct multitype_outcome {
  std::vector<std::size_t> final_by_type; ///< infected per type, excluding initial infectives
  std::size_t total = 0;
  double extinction_time = 0.0;
};

/// Event-driven multitype SIR: an i-infective contacts each given
/// j-individual at rate lambda_ij / n.
class multitype_simulator {
public:
  template <class Rng>
  multitype_outcome run(const multitype_params& p, std::size_t n, const std::vector<std::size_t>& m_by_type,
                        Rng& rng) {
    p.validate();
    const std::size_t k = p.types();
    EPISIM_REQUIRE(m_by_type.size() == k);
    EPISIM_REQUIRE(std::accumulate(m_by_type.begin(), m_by_type.end(), std::size_t{0}) >= 1);
    counts_ = type_counts(n, p.pi);
    offset_.assign(k + 1, 0);
    for (std::size_t j = 0; j < k; ++j) {
      EPISIM_REQUIRE(m_by_type[j] <= counts_[j]);
      offset_[j + 1] = offset_[j] + counts_[j];
    }
    type_of_.resize(n);
    for (std::size_t j = 0; j < k; ++j)
      std::fill(type_of_.begin() + static_cast<long>(offset_[j]), type_of_.begin() + static_cast<long>(offset_[j + 1]),
                static_cast<std::uint32_t>(j));
    susceptible_.assign(n, 1);
    queue_.clear();

    multitype_outcome out;
    out.final_by_type.assign(k, 0);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t c = 0; c < m_by_type[j]; ++c) infect(p, n, rng, offset_[j] + c, 0.0);

    while (!queue_.empty()) {
      std::pop_heap(queue_.begin(), queue_.end(), later);
      const event ev = queue_.back();
      queue_.pop_back();
      if (ev.target_type < 0) {
        out.extinction_time = ev.t;
        continue;
      }
      const auto j = static_cast<std::size_t>(ev.target_type);
      const std::size_t target = offset_[j] + uniform_index(rng, counts_[j]);
      if (susceptible_[target]) {
        ++out.final_by_type[j];
        ++out.total;
        infect(p, n, rng, target, ev.t);
      }
    }
    return out;
  }

private:
  struct event {
    double t;
    int target_type; ///< -1 marks a recovery
  };
  static bool later(const event& a, const event& b) { return a.t > b.t; }

  template <class Rng>
  void infect(const multitype_params& p, std::size_t n, Rng& rng, std::size_t who, double t) {
    susceptible_[who] = 0;
    const std::size_t i = type_of_[who];
    const double d = p.periods[i].sample(rng);
    for (std::size_t j = 0; j < p.types(); ++j) {
      const double rate = p.lambda[i][j] * static_cast<double>(counts_[j]) / static_cast<double>(n);
      if (rate <= 0.0 || d <= 0.0 || counts_[j] == 0) continue;
      std::poisson_distribution<long> contacts(rate * d);
      const long c = contacts(rng);
      for (long e = 0; e < c; ++e) {
        queue_.push_back({t + uniform01(rng) * d, static_cast<int>(j)});
        std::push_heap(queue_.begin(), queue_.end(), later);
      }
    }
    queue_.push_back({t + d, -1});
    std::push_heap(queue_.begin(), queue_.end(), later);
  }

  std::vector<std::size_t> counts_, offset_;
  std::vector<std::uint32_t> type_of_;
  std::vector<std::uint8_t> susceptible_;
  std::vector<event> queue_;
};

template <class Rng>
multitype_outcome simulate_multitype(const multitype_params& p, std::size_t n,
                                     const std::vector<std::size_t>& m_by_type, Rng& rng) {
  multitype_simulator sim;
  return sim.run(p, n, m_by_type, rng);
}

inline std::vector<multitype_outcome> simulate_multitype_replicates(const multitype_params& p, std::size_t n,
                                                                    const std::vector<std::size_t>& m_by_type,
                                                                    std::size_t reps, std::uint64_t master_seed,
                                                                    unsigned threads = 0) {
  return run_replicates<multitype_outcome>(
      reps, master_seed,
      [&] {
        return [&, sim = multitype_simulator{}](stream& rng, std::size_t) mutable {
          return sim.run(p, n, m_by_type, rng);
        };
      },
      threads);
}

} // namespace episim
