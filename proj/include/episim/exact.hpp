#pragma once

// Exact final-size distribution of the standard SIR epidemic.
//
// With N = n - m initial susceptibles and per-pair infection rate beta, the
// probabilities p_0..p_N solve the lower-triangular system
//
//   sum_{i<=k} C(N-i, k-i) p_i / phi((N-k) beta)^(m+i) = C(N, k),  k = 0..N,
//
// where phi is the Laplace transform of the infectious period. Forward
// substitution loses roughly log2(C(N,k) / |p_k phi^-(m+k)|) bits per row,
// so the solve runs in MPFR arithmetic at a caller-chosen precision and
// reports how much was lost.

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "episim/dists.hpp"
#include "episim/errors.hpp"
#include "episim/parallel.hpp"
#include "episim/sim.hpp"

namespace episim {

namespace detail {

// Owning MPFR value with a fixed precision.
class mp_real {
public:
  explicit mp_real(mpfr_prec_t bits) {
    mpfr_init2(v_, bits);
    mpfr_set_zero(v_, 1);
  }
  mp_real(mpfr_prec_t bits, double x) : mp_real(bits) { mpfr_set_d(v_, x, MPFR_RNDN); }
  mp_real(const mp_real& o) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, MPFR_RNDN);
  }
  mp_real& operator=(const mp_real& o) {
    if (this != &o) {
      mpfr_set_prec(v_, mpfr_get_prec(o.v_));
      mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    return *this;
  }
  ~mp_real() { mpfr_clear(v_); }

  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }
  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  // log2 |x|; -inf for zero.
  double log2_abs() const {
    if (mpfr_zero_p(v_)) return -std::numeric_limits<double>::infinity();
    long exp = 0;
    const double mant = mpfr_get_d_2exp(&exp, v_, MPFR_RNDN);
    return std::log2(std::abs(mant)) + static_cast<double>(exp);
  }

private:
  mpfr_t v_;
};

// out = phi(theta) for the given period law, in out's precision.
inline void mp_laplace(const duration_distribution& period, const mp_real& theta, mp_real& out) {
  const mpfr_prec_t bits = mpfr_get_prec(out.get());
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, exponential_period>) {
          mp_real denom(bits, d.rate);
          mpfr_add(denom.get(), denom.get(), theta.get(), MPFR_RNDN);
          mpfr_d_div(out.get(), d.rate, denom.get(), MPFR_RNDN);
        } else if constexpr (std::is_same_v<T, constant_period>) {
          mpfr_mul_d(out.get(), theta.get(), -d.value, MPFR_RNDN);
          mpfr_exp(out.get(), out.get(), MPFR_RNDN);
        } else {
          mp_real denom(bits, d.rate);
          mpfr_add(denom.get(), denom.get(), theta.get(), MPFR_RNDN);
          mpfr_d_div(out.get(), d.rate, denom.get(), MPFR_RNDN);
          mp_real shape(bits, d.shape);
          mpfr_pow(out.get(), out.get(), shape.get(), MPFR_RNDN);
        }
      },
      period.kind());
}

} // namespace detail

struct exact_options {
  unsigned precision_bits = 256;
  std::size_t max_susceptibles = 2000;
};

struct final_size_pmf_result {
  std::vector<double> probabilities; ///< probabilities[k] = P(Z = k), k = 0..n-m
  std::size_t n = 0;
  std::size_t m = 0;
  /// Largest violation of the normalized equations (each divided by
  /// C(N, k)) by the returned probabilities, evaluated at 512 bits.
  double max_residual = 0.0;
  unsigned precision_bits = 0;
  /// Largest number of bits cancelled when forming any p_k.
  double cancellation_bits = 0.0;
  /// Residual below 1e-10 and at least 96 bits left after cancellation.
  bool reliable = true;

  double mean() const {
    double s = 0.0;
    for (std::size_t k = 0; k < probabilities.size(); ++k) s += static_cast<double>(k) * probabilities[k];
    return s;
  }
};

/// Final-size pmf for `population` individuals of which `m` are initially
/// infective, where every infective contacts each given individual at rate
/// `pair_rate` during its infectious period.
inline final_size_pmf_result final_size_pmf_pairwise(std::size_t population, std::size_t m, double pair_rate,
                                                     const duration_distribution& period,
                                                     const exact_options& opt = {}) {
  EPISIM_REQUIRE(population >= m && m >= 1);
  EPISIM_REQUIRE(pair_rate >= 0.0);
  EPISIM_REQUIRE(opt.precision_bits >= 53);
  const std::size_t N = population - m;
  if (N > opt.max_susceptibles)
    throw capacity_error("exact final size limited to " + std::to_string(opt.max_susceptibles) +
                         " susceptibles (got " + std::to_string(N) + "); use the asymptotic approximations");

  using detail::mp_real;
  const auto bits = static_cast<mpfr_prec_t>(opt.precision_bits);

  final_size_pmf_result out;
  out.n = population;
  out.m = m;
  out.precision_bits = opt.precision_bits;

  std::vector<mp_real> p(N + 1, mp_real(bits));
  mp_real beta(bits, pair_rate), theta(bits), phi(bits), inv(bits);
  mp_real row_binom(bits, 1.0); // C(N, k)
  mp_real b(bits), pw(bits), term(bits), sum(bits), diff(bits);

  for (std::size_t k = 0; k <= N; ++k) {
    mpfr_mul_ui(theta.get(), beta.get(), static_cast<unsigned long>(N - k), MPFR_RNDN);
    detail::mp_laplace(period, theta, phi);
    mpfr_ui_div(inv.get(), 1, phi.get(), MPFR_RNDN);

    mpfr_pow_ui(pw.get(), inv.get(), static_cast<unsigned long>(m), MPFR_RNDN);
    mpfr_set(b.get(), row_binom.get(), MPFR_RNDN);
    mpfr_set_zero(sum.get(), 1);
    for (std::size_t i = 0; i < k; ++i) {
      mpfr_mul(term.get(), b.get(), p[i].get(), MPFR_RNDN);
      mpfr_mul(term.get(), term.get(), pw.get(), MPFR_RNDN);
      mpfr_add(sum.get(), sum.get(), term.get(), MPFR_RNDN);
      // C(N-i-1, k-i-1) = C(N-i, k-i) (k-i) / (N-i)
      mpfr_mul_ui(b.get(), b.get(), static_cast<unsigned long>(k - i), MPFR_RNDN);
      mpfr_div_ui(b.get(), b.get(), static_cast<unsigned long>(N - i), MPFR_RNDN);
      mpfr_mul(pw.get(), pw.get(), inv.get(), MPFR_RNDN);
    }
    mpfr_sub(diff.get(), row_binom.get(), sum.get(), MPFR_RNDN);
    mpfr_div(p[k].get(), diff.get(), pw.get(), MPFR_RNDN);

    if (k > 0) {
      const double lost = row_binom.log2_abs() - diff.log2_abs();
      out.cancellation_bits = std::max(out.cancellation_bits, std::isfinite(lost) ? lost : 0.0);
    }
    if (k < N) {
      mpfr_mul_ui(row_binom.get(), row_binom.get(), static_cast<unsigned long>(N - k), MPFR_RNDN);
      mpfr_div_ui(row_binom.get(), row_binom.get(), static_cast<unsigned long>(k + 1), MPFR_RNDN);
    }
  }

  out.probabilities.resize(N + 1);
  for (std::size_t k = 0; k <= N; ++k) out.probabilities[k] = std::clamp(p[k].to_double(), 0.0, 1.0);

  // Residual of the delivered doubles, at a fixed precision so that it only
  // depends on the returned probabilities.
  constexpr mpfr_prec_t kResidualBits = 512;
  mp_real rbeta(kResidualBits, pair_rate), rtheta(kResidualBits), rphi(kResidualBits), rinv(kResidualBits);
  mp_real rrow(kResidualBits, 1.0), rb(kResidualBits), rpw(kResidualBits), rterm(kResidualBits),
      rsum(kResidualBits);
  for (std::size_t k = 0; k <= N; ++k) {
    mpfr_mul_ui(rtheta.get(), rbeta.get(), static_cast<unsigned long>(N - k), MPFR_RNDN);
    detail::mp_laplace(period, rtheta, rphi);
    mpfr_ui_div(rinv.get(), 1, rphi.get(), MPFR_RNDN);
    mpfr_pow_ui(rpw.get(), rinv.get(), static_cast<unsigned long>(m), MPFR_RNDN);
    mpfr_set_ui(rb.get(), 1, MPFR_RNDN); // C(N-i, k-i) / C(N, k)
    mpfr_set_zero(rsum.get(), 1);
    for (std::size_t i = 0; i <= k; ++i) {
      mpfr_mul_d(rterm.get(), rb.get(), out.probabilities[i], MPFR_RNDN);
      mpfr_mul(rterm.get(), rterm.get(), rpw.get(), MPFR_RNDN);
      mpfr_add(rsum.get(), rsum.get(), rterm.get(), MPFR_RNDN);
      if (i < k) {
        mpfr_mul_ui(rb.get(), rb.get(), static_cast<unsigned long>(k - i), MPFR_RNDN);
        mpfr_div_ui(rb.get(), rb.get(), static_cast<unsigned long>(N - i), MPFR_RNDN);
        mpfr_mul(rpw.get(), rpw.get(), rinv.get(), MPFR_RNDN);
      }
    }
    mpfr_sub_ui(rsum.get(), rsum.get(), 1, MPFR_RNDN);
    out.max_residual = std::max(out.max_residual, std::abs(rsum.to_double()));
  }
  out.reliable = out.max_residual <= 1e-10 &&
                 static_cast<double>(opt.precision_bits) >= out.cancellation_bits + 96.0;
  return out;
}

/// Final-size pmf of the standard model: per-pair rate lambda / n.
inline final_size_pmf_result final_size_pmf(std::size_t n, std::size_t m, double lambda,
                                            const duration_distribution& period, const exact_options& opt = {}) {
  EPISIM_REQUIRE(n >= m && m >= 1);
  EPISIM_REQUIRE(lambda > 0.0);
  return final_size_pmf_pairwise(n, m, lambda / static_cast<double>(n), period, opt);
}

/// Doubles the precision until two successive solves agree to 1e-15 and the
/// finer one is reliable.
inline final_size_pmf_result final_size_pmf_adaptive(std::size_t n, std::size_t m, double lambda,
                                                     const duration_distribution& period,
                                                     exact_options opt = {}, unsigned max_bits = 1u << 15) {
  auto coarse = final_size_pmf(n, m, lambda, period, opt);
  while (opt.precision_bits < max_bits) {
    opt.precision_bits = std::min(max_bits, 2 * opt.precision_bits);
    auto fine = final_size_pmf(n, m, lambda, period, opt);
    double diff = 0.0;
    for (std::size_t k = 0; k < fine.probabilities.size(); ++k)
      diff = std::max(diff, std::abs(fine.probabilities[k] - coarse.probabilities[k]));
    if (fine.reliable && diff <= 1e-15) return fine;
    coarse = std::move(fine);
  }
  return coarse;
}

struct wald_estimate {
  double estimate;
  double std_error;
};

/// Monte Carlo mean of exp(-theta A) / phi(theta lambda/n)^(m+Z), where A is
/// the total infection pressure (lambda/n) * sum of all infectious periods.
inline wald_estimate wald_identity_check(const epidemic_params& p, double theta, std::size_t reps,
                                         std::uint64_t master_seed, unsigned threads = 0) {
  p.validate();
  EPISIM_REQUIRE(theta >= 0.0);
  EPISIM_REQUIRE(reps >= 1000);
  if (theta == 0.0) return {1.0, 0.0};
  const double per_capita = p.lambda / static_cast<double>(p.n);
  const double log_phi = std::log(p.infectious_period.laplace(theta * per_capita));
  const auto runs = simulate_replicates(p, reps, master_seed, simulator_kind::event_driven, threads);
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& r : runs) {
    const double a = per_capita * r.total_infectious_time;
    const double v = std::exp(-theta * a - static_cast<double>(p.m + r.final_size) * log_phi);
    sum += v;
    sum_sq += v * v;
  }
  const auto k = static_cast<double>(reps);
  const double mean = sum / k;
  const double var = std::max(0.0, (sum_sq - k * mean * mean) / (k - 1));
  return {mean, std::sqrt(var / k)};
}

} // namespace episim
