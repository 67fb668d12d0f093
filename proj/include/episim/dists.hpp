#pragma once

// Infectious and latent period laws.

#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>

#include "episim/errors.hpp"
#include "episim/rng.hpp"

namespace episim {

struct exponential_period {
  double rate;
};

struct constant_period {
  double value;
};

struct gamma_period {
  double shape;
  double rate;
};

/// Immutable duration distribution: Exponential(rate), Constant(value) or
/// Gamma(shape, rate). Parameters are validated on construction.
class duration_distribution {
public:
  using kind_type = std::variant<exponential_period, constant_period, gamma_period>;

  static duration_distribution exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate))
      throw precondition_error("exponential rate > 0");
    return duration_distribution(exponential_period{rate});
  }

  static duration_distribution constant(double value) {
    if (!(value >= 0.0) || !std::isfinite(value))
      throw precondition_error("constant value >= 0");
    return duration_distribution(constant_period{value});
  }

  static duration_distribution gamma(double shape, double rate) {
    if (!(shape > 0.0) || !std::isfinite(shape))
      throw precondition_error("gamma shape > 0");
    if (!(rate > 0.0) || !std::isfinite(rate))
      throw precondition_error("gamma rate > 0");
    return duration_distribution(gamma_period{shape, rate});
  }

  /// Parses the compact command-line form: "exp:RATE", "const:VALUE" or
  /// "gamma:SHAPE,RATE" (long names "exponential", "constant" also accepted).
  static duration_distribution parse(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("distribution '" + text +
                                  "' must look like exp:RATE, const:VALUE or gamma:SHAPE,RATE");
    const std::string kind = text.substr(0, colon);
    const std::string args = text.substr(colon + 1);
    auto number = [&](const std::string& s) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != s.size())
        throw std::invalid_argument("bad number '" + s + "' in distribution '" + text + "'");
      return v;
    };
    if (kind == "exp" || kind == "exponential") return exponential(number(args));
    if (kind == "const" || kind == "constant") return constant(number(args));
    if (kind == "gamma") {
      const auto comma = args.find(',');
      if (comma == std::string::npos)
        throw std::invalid_argument("gamma needs SHAPE,RATE in '" + text + "'");
      return gamma(number(args.substr(0, comma)), number(args.substr(comma + 1)));
    }
    throw std::invalid_argument("unknown distribution kind '" + kind + "'");
  }

  const kind_type& kind() const { return kind_; }

  double mean() const {
    return std::visit(
        [](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, exponential_period>) return 1.0 / d.rate;
          else if constexpr (std::is_same_v<T, constant_period>) return d.value;
          else return d.shape / d.rate;
        },
        kind_);
  }

  double variance() const {
    return std::visit(
        [](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, exponential_period>) return 1.0 / (d.rate * d.rate);
          else if constexpr (std::is_same_v<T, constant_period>) return 0.0;
          else return d.shape / (d.rate * d.rate);
        },
        kind_);
  }

  /// Squared coefficient of variation Var/Mean^2.
  double scv() const {
    return std::visit(
        [](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, exponential_period>) return 1.0;
          else if constexpr (std::is_same_v<T, constant_period>) return 0.0;
          else return 1.0 / d.shape;
        },
        kind_);
  }

  /// Laplace transform E[exp(-theta * I)] for theta >= 0.
  double laplace(double theta) const {
    if (!(theta >= 0.0)) throw std::domain_error("laplace transform needs theta >= 0");
    return std::visit(
        [theta](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, exponential_period>) return d.rate / (d.rate + theta);
          else if constexpr (std::is_same_v<T, constant_period>) return std::exp(-theta * d.value);
          else return std::pow(d.rate / (d.rate + theta), d.shape);
        },
        kind_);
  }

  template <class Rng> double sample(Rng& rng) const {
    return std::visit(
        [&rng](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, exponential_period>) {
            return sample_exponential(rng, d.rate);
          } else if constexpr (std::is_same_v<T, constant_period>) {
            return d.value;
          } else {
            std::gamma_distribution<double> g(d.shape, 1.0 / d.rate);
            return g(rng);
          }
        },
        kind_);
  }

  bool is_exponential() const { return std::holds_alternative<exponential_period>(kind_); }
  bool is_constant() const { return std::holds_alternative<constant_period>(kind_); }

  std::string to_string() const {
    return std::visit(
        [](const auto& d) -> std::string {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, exponential_period>) return "exp:" + fmt(d.rate);
          else if constexpr (std::is_same_v<T, constant_period>) return "const:" + fmt(d.value);
          else return "gamma:" + fmt(d.shape) + "," + fmt(d.rate);
        },
        kind_);
  }

  friend bool operator==(const duration_distribution& a, const duration_distribution& b) {
    return a.to_string() == b.to_string();
  }

private:
  explicit duration_distribution(kind_type kind) : kind_(kind) {}

  static std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }

  kind_type kind_;
};

} // namespace episim
