#pragma once

// Large-population approximations: branching-process extinction, the
// final-size balance equation, the major-outbreak CLT, total progeny of the
// birth-death branching process and the deterministic general epidemic.

#include <cmath>
#include <limits>
#include <vector>

#include "episim/dists.hpp"
#include "episim/errors.hpp"

namespace episim {

inline constexpr double kRootTolerance = 1e-12;

namespace detail {

// Bisection on a sign change: f(lo) and f(hi) must have opposite signs.
template <class F> double bisect(F&& f, double lo, double hi, double tol = kRootTolerance) {
  double flo = f(lo);
  for (int it = 0; it < 200 && hi - lo > tol * 0.5; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = f(mid);
    if (fmid == 0.0) return mid;
    if ((fmid > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

} // namespace detail

/// R0 = lambda * E(I).
inline double basic_reproduction_number(double lambda, const duration_distribution& period) {
  EPISIM_REQUIRE(lambda > 0.0);
  return lambda * period.mean();
}

struct branching_approx {
  double r0;
  double q;                   ///< extinction probability of one initial lineage
  double major_outbreak_prob; ///< 1 - q^m
};

/// Smallest root of q = phi(lambda (1 - q)) on [0, 1].
inline branching_approx extinction_probability(double lambda, const duration_distribution& period,
                                               std::size_t m) {
  EPISIM_REQUIRE(lambda > 0.0);
  EPISIM_REQUIRE(m >= 1);
  const double r0 = basic_reproduction_number(lambda, period);
  if (r0 <= 1.0) return {r0, 1.0, 0.0};

  auto g = [&](double q) { return period.laplace(lambda * (1.0 - q)) - q; };
  // g is convex with g(0) > 0 and g(1) = 0, g'(1) = R0 - 1 > 0, so it is
  // negative on (q, 1). Walk towards 1 until it is.
  double hi = 0.5;
  for (int j = 2; g(hi) >= 0.0; ++j) {
    if (j > 60) return {r0, 1.0, 0.0};
    hi = 1.0 - std::ldexp(1.0, -j);
  }
  const double q = detail::bisect(g, 0.0, hi);
  return {r0, q, 1.0 - std::pow(q, static_cast<double>(m))};
}

/// Largest root z in [0, 1] of 1 - z = (1 - eps) exp(-R0 z).
inline double final_size_fraction(double r0, double eps = 0.0) {
  EPISIM_REQUIRE(r0 >= 0.0);
  EPISIM_REQUIRE(eps >= 0.0 && eps < 1.0);
  auto h = [&](double z) { return 1.0 - z - (1.0 - eps) * std::exp(-r0 * z); };
  if (eps == 0.0 && r0 <= 1.0) return 0.0;
  // h is concave with its maximum at log(R0)/R0, where it is positive.
  const double lo = r0 > 1.0 ? std::log(r0) / r0 : 0.0;
  if (h(lo) <= 0.0) return lo;
  return detail::bisect(h, lo, 1.0);
}

/// Standard deviation of the major-outbreak final size Z_n from the CLT
/// variance n z(1-z)(1 + r2 (1-z) R0^2) / (1 - (1-z) R0)^2.
inline double clt_standard_deviation(double n, double r0, double r2, double z_star) {
  EPISIM_REQUIRE(r0 > 1.0);
  EPISIM_REQUIRE(z_star >= 0.0 && z_star < 1.0);
  const double escape = 1.0 - z_star;
  const double denom = 1.0 - escape * r0;
  if (std::abs(denom) < 1e-12)
    throw singularity_error("CLT variance is singular at (1 - z*) R0 = 1");
  return std::sqrt(n * z_star * escape * (1.0 + r2 * escape * r0 * r0)) / std::abs(denom);
}

/// P(total progeny = j) for the birth-death branching process with
/// offspring mean R0 (exponential infectious period):
/// C(2j, j) / (j + 1) * (1/(1+R0))^(j+1) * (R0/(1+R0))^j.
inline double total_progeny_pmf(double r0, std::size_t j) {
  EPISIM_REQUIRE(r0 >= 0.0);
  if (r0 == 0.0) return j == 0 ? 1.0 : 0.0;
  const double jj = static_cast<double>(j);
  const double log_catalan = std::lgamma(2.0 * jj + 1.0) - 2.0 * std::lgamma(jj + 1.0) - std::log(jj + 1.0);
  const double log_p = -std::log1p(r0);
  const double log_r = std::log(r0) - std::log1p(r0);
  return std::exp(log_catalan + (jj + 1.0) * log_p + jj * log_r);
}

/// Probability that none of the first k contacts hits an already infected
/// individual: (n - m)_k / n^k.
inline double ghost_free_probability(std::size_t n, std::size_t m, std::size_t k) {
  EPISIM_REQUIRE(n >= m);
  if (k > n - m) throw std::domain_error("ghost_free_probability needs k <= n - m");
  double p = 1.0;
  const double nn = static_cast<double>(n);
  for (std::size_t i = 0; i < k; ++i) p *= static_cast<double>(n - m - i) / nn;
  return p;
}

struct deterministic_state {
  double t = 0.0;
  double s = 1.0;
  double i = 0.0;
  double r = 0.0;
};

/// Fixed-step RK4 integration of the deterministic general epidemic
/// s' = -lambda s i, i' = lambda s i - gamma i, r' = gamma i.
/// States are recorded every `record_interval` time units plus the endpoint.
inline std::vector<deterministic_state>
deterministic_trajectory(double lambda, double gamma, deterministic_state initial, double t_end,
                         double step = 1e-3, double record_interval = 0.1) {
  if (!(step > 0.0)) throw precondition_error("step > 0");
  EPISIM_REQUIRE(lambda >= 0.0 && gamma >= 0.0);
  EPISIM_REQUIRE(initial.s >= 0.0 && initial.i >= 0.0 && initial.r >= 0.0);
  EPISIM_REQUIRE(std::abs(initial.s + initial.i + initial.r - 1.0) < 1e-9);
  EPISIM_REQUIRE(t_end >= initial.t);

  auto deriv = [&](double s, double i, double& ds, double& di, double& dr) {
    const double inf = lambda * s * i;
    ds = -inf;
    di = inf - gamma * i;
    dr = gamma * i;
  };

  std::vector<deterministic_state> out{initial};
  deterministic_state x = initial;
  const auto steps = static_cast<std::size_t>(std::ceil((t_end - initial.t) / step - 1e-9));
  const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(record_interval / step)));
  for (std::size_t k = 1; k <= steps; ++k) {
    const double h = std::min(step, t_end - x.t);
    double s1, i1, r1, s2, i2, r2, s3, i3, r3, s4, i4, r4;
    deriv(x.s, x.i, s1, i1, r1);
    deriv(x.s + 0.5 * h * s1, x.i + 0.5 * h * i1, s2, i2, r2);
    deriv(x.s + 0.5 * h * s2, x.i + 0.5 * h * i2, s3, i3, r3);
    deriv(x.s + h * s3, x.i + h * i3, s4, i4, r4);
    x.s += h / 6.0 * (s1 + 2 * s2 + 2 * s3 + s4);
    x.i += h / 6.0 * (i1 + 2 * i2 + 2 * i3 + i4);
    x.r += h / 6.0 * (r1 + 2 * r2 + 2 * r3 + r4);
    x.t = initial.t + static_cast<double>(k) * step;
    if (k == steps) x.t = t_end;
    if (k % stride == 0 || k == steps) out.push_back(x);
  }
  return out;
}

} // namespace episim
