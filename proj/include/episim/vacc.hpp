#pragma once

// Vaccination prior to an outbreak.

#include <algorithm>
#include <cmath>

#include "episim/errors.hpp"
#include "episim/policy.hpp"
#include "episim/sim.hpp"

namespace episim {

/// R_v = (1 - v) R0.
inline double post_vaccination_r(double r0, double v) {
  EPISIM_REQUIRE(r0 >= 0.0);
  EPISIM_REQUIRE(v >= 0.0 && v <= 1.0);
  return (1.0 - v) * r0;
}

/// v_C = max(0, 1 - 1/R0).
inline double critical_coverage(double r0) {
  EPISIM_REQUIRE(r0 > 0.0);
  return std::max(0.0, 1.0 - 1.0 / r0);
}

struct coverage_requirement {
  double coverage;  ///< (1/e)(1 - 1/R0); may exceed 1
  bool achievable;  ///< coverage <= 1
};

/// Critical coverage for a vaccine reducing susceptibility by a factor e.
inline coverage_requirement imperfect_critical_coverage(double r0, double efficacy) {
  if (!(efficacy > 0.0)) throw std::domain_error("vaccine efficacy must be positive");
  EPISIM_REQUIRE(efficacy <= 1.0);
  EPISIM_REQUIRE(r0 > 1.0);
  const double v = (1.0 - 1.0 / r0) / efficacy;
  return {v, v <= 1.0};
}

/// Perfect-vaccine substitution n' = round(n (1 - v)), lambda' = lambda (1 - v):
/// the vaccinated are dropped from the community and every remaining
/// infective's contacts land on unvaccinated individuals at the reduced rate.
inline epidemic_params transform_for_vaccination(const epidemic_params& p, double v) {
  p.validate();
  EPISIM_REQUIRE(v >= 0.0 && v <= 1.0);
  const auto n_prime = static_cast<std::size_t>(std::llround(static_cast<double>(p.n) * (1.0 - v)));
  if (n_prime < p.m) throw precondition_error("n (1 - v) >= m");
  epidemic_params out = p;
  out.n = n_prime;
  out.lambda = p.lambda * (1.0 - v);
  out.vaccination.reset();
  return out;
}

} // namespace episim
