#pragma once

// Estimation of R0 and the critical vaccination coverage from the final size
// of one major outbreak, with delta-method standard errors.

#include <cmath>

#include "episim/errors.hpp"

namespace episim {

struct outbreak_observation {
  std::size_t z = 0;  ///< infected during the outbreak, excluding index cases
  std::size_t n = 0;  ///< community size
  std::size_t m = 1;  ///< index cases
  double r2 = 1.0;    ///< assumed squared coefficient of variation of the infectious period
};

struct estimate_with_se {
  double point = 0.0;
  double se = 0.0;
  double r2_used = 1.0;
  bool warning = false; ///< set when the estimate is outside its meaningful range
};

namespace detail {

inline double observed_fraction(const outbreak_observation& obs) {
  EPISIM_REQUIRE(obs.n >= 1);
  EPISIM_REQUIRE(obs.r2 >= 0.0);
  if (obs.z == 0) throw singularity_error("R0 estimator undefined for z = 0 (no outbreak observed)");
  EPISIM_REQUIRE(obs.z + obs.m <= obs.n);
  const double zbar = static_cast<double>(obs.z) / static_cast<double>(obs.n);
  if (zbar >= 1.0) throw singularity_error("R0 estimator has a log singularity at z/n = 1");
  return zbar;
}

} // namespace detail

/// R0_hat = -log(1 - zbar) / zbar with
/// se = sqrt((1 + r2 (1 - zbar) R0_hat^2) / (n zbar (1 - zbar))), zbar = z / n.
inline estimate_with_se estimate_r0(const outbreak_observation& obs) {
  const double zbar = detail::observed_fraction(obs);
  const double r0 = -std::log1p(-zbar) / zbar;
  const double se = std::sqrt((1.0 + obs.r2 * (1.0 - zbar) * r0 * r0) /
                              (static_cast<double>(obs.n) * zbar * (1.0 - zbar)));
  return {r0, se, obs.r2, false};
}

/// v_C_hat = 1 - 1/R0_hat with se = se(R0_hat) / R0_hat^2. The warning flag
/// is raised when R0_hat <= 1 (no vaccination needed).
inline estimate_with_se estimate_vc(const outbreak_observation& obs) {
  const auto r0 = estimate_r0(obs);
  return {1.0 - 1.0 / r0.point, r0.se / (r0.point * r0.point), obs.r2, r0.point <= 1.0};
}

} // namespace episim
