#pragma once

#include "episim/errors.hpp"

namespace episim {

enum class vaccine_mode {
  leaky,         ///< every vaccinee's susceptibility is scaled by (1 - e)
  all_or_nothing ///< each vaccinee is fully immune with probability e
};

/// Pre-outbreak vaccination of a fraction `coverage` of the community with a
/// vaccine of efficacy `efficacy` (1 = perfect).
struct vaccination_policy {
  double coverage = 0.0;
  double efficacy = 1.0;
  vaccine_mode mode = vaccine_mode::all_or_nothing;

  void validate() const {
    EPISIM_REQUIRE(coverage >= 0.0 && coverage <= 1.0);
    EPISIM_REQUIRE(efficacy > 0.0 && efficacy <= 1.0);
  }

  /// Fraction by which the reproduction number is reduced. Both modes give
  /// the same expected reduction v * e.
  double susceptibility_reduction() const { return coverage * efficacy; }
};

} // namespace episim
