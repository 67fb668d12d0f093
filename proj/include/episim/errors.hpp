#pragma once

#include <stdexcept>
#include <string>

namespace episim {

/// Raised when an input violates an operation's documented precondition.
/// The message carries the violated condition verbatim.
class precondition_error : public std::invalid_argument {
public:
  explicit precondition_error(const std::string& condition)
      : std::invalid_argument("precondition violated: " + condition) {}
};

/// Problem size exceeds a configured cap.
class capacity_error : public std::length_error {
public:
  using std::length_error::length_error;
};

/// Formula evaluated at a singular point (criticality, log(0), ...).
class singularity_error : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Iterative method failed to reach its tolerance within the iteration cap.
class convergence_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define EPISIM_REQUIRE(cond)                                                   \
  do {                                                                         \
    if (!(cond)) throw ::episim::precondition_error(#cond);                    \
  } while (false)

} // namespace episim
