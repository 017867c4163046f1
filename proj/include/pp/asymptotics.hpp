#pragma once

// Numeric checks of the asymptotic laws: summatory ratios for two and m
// parts, the odd-prime series near z = 1, the twin prime constant, the
// Hardy-Littlewood prediction and the Hardy-Ramanujan log-asymptotic.
// All logarithms are natural.

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "pp/count_table.hpp"
#include "pp/counts.hpp"
#include "pp/error.hpp"
#include "pp/primes.hpp"
#include "pp/uint128.hpp"

namespace pp {

/// Neumaier-compensated running sum.
class compensated_sum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0;
  double comp_ = 0;
};

/// g(x) ~ (r-x)^{-rho} L(1/(r-x)) with L(t) = 1/log^rho t, so that
/// sum_{k<=n} a_k r^k ~ (n/r)^rho L(n) / Gamma(rho+1).
struct AsymptoticLaw {
  double r = 1.0;
  unsigned rho = 2;
  std::string slowly_varying = "1/log^rho(t)";
  u128 gamma_factor = 2;  // Gamma(rho+1) = rho!

  double L(double t) const { return 1.0 / std::pow(std::log(t), rho); }

  double predicted_partial_sum(double n) const {
    return std::pow(n / r, rho) * L(n) / to_double(gamma_factor);
  }
};

inline AsymptoticLaw tauberian_law(unsigned rho) {
  if (rho < 2 || rho > 8) throw std::invalid_argument("tauberian_law: rho must lie in [2, 8]");
  return {1.0, rho, "1/log^" + std::to_string(rho) + "(t)", factorial(rho)};
}

struct AsymptoticRow {
  double scale = 0;
  double computed = 0;
  double predicted = 0;
  double ratio = 0;
};

struct AsymptoticReport {
  std::string theorem;
  nlohmann::json params = nlohmann::json::object();
  std::vector<AsymptoticRow> rows;
  // metadata, excluded from determinism comparisons
  std::string timestamp;
  std::string provenance;

  void add_row(double scale, double computed, double predicted) {
    if (!(predicted > 0)) throw std::invalid_argument("AsymptoticReport: predicted value must be positive");
    rows.push_back({scale, computed, predicted, computed / predicted});
  }
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline void write_csv(std::ostream& os, const AsymptoticReport& rep) {
  os << "scale,computed,predicted,ratio\n";
  for (const auto& r : rep.rows)
    os << detail::fmt_double(r.scale) << ',' << detail::fmt_double(r.computed) << ','
       << detail::fmt_double(r.predicted) << ',' << detail::fmt_double(r.ratio) << '\n';
}

inline nlohmann::json to_json(const AsymptoticReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"scale", r.scale}, {"computed", r.computed}, {"predicted", r.predicted}, {"ratio", r.ratio}});
  nlohmann::json j = {{"theorem", rep.theorem}, {"params", rep.params}, {"rows", rows}};
  if (!rep.timestamp.empty() || !rep.provenance.empty())
    j["meta"] = {{"timestamp", rep.timestamp}, {"provenance", rep.provenance}};
  return j;
}

/// S(2n) log^2(n) / (2 n^2).
inline double theorem1_ratio(const CountTable& counts, std::uint64_t n) {
  if (counts.m() != 2) throw std::invalid_argument("theorem1_ratio: count table must have m = 2");
  if (n < 16) throw std::invalid_argument("theorem1_ratio: n must be at least 16");
  if (2 * n > counts.n()) throw std::out_of_range("theorem1_ratio: 2n above count table range");
  const double s = to_double(summatory(counts, 2 * n));
  const double ln = std::log(static_cast<double>(n));
  return s * ln * ln / (2.0 * static_cast<double>(n) * static_cast<double>(n));
}

inline double theorem1_predicted(std::uint64_t n) {
  const double ln = std::log(static_cast<double>(n));
  return 2.0 * static_cast<double>(n) * static_cast<double>(n) / (ln * ln);
}

/// |Sigma_{m,n}| m! log^m(n) / n^m. For m = 2 the argument is the range 2n'
/// and the result is theorem1_ratio(counts, n').
inline double theorem3_ratio(const CountTable& counts, std::uint64_t n) {
  if (n > counts.n()) throw std::out_of_range("theorem3_ratio: n above count table range");
  if (counts.m() == 2) {
    if (n % 2 != 0) throw std::invalid_argument("theorem3_ratio: m = 2 needs an even range");
    return theorem1_ratio(counts, n / 2);
  }
  if (counts.m() < 2) throw std::invalid_argument("theorem3_ratio: m must be at least 2");
  if (n < 3) throw std::invalid_argument("theorem3_ratio: n must be at least 3");
  const double sigma = to_double(summatory(counts, n));
  return sigma / tauberian_law(counts.m()).predicted_partial_sum(static_cast<double>(n));
}

/// Compensated sum of e^{-pt} over odd primes p <= cutoff, ascending p.
inline double odd_prime_exponential_sum(const PrimeTable& table, double t, std::uint64_t cutoff) {
  if (cutoff > table.limit()) throw std::out_of_range("odd_prime_exponential_sum: cutoff above table limit");
  compensated_sum acc;
  for (std::uint64_t p : table.odd_primes()) {
    if (p > cutoff) break;
    acc.add(std::exp(-static_cast<double>(p) * t));
  }
  return acc.value();
}

inline constexpr double kLemma2CutoffScale = 40.0;  // e^{-40} < 1e-16

inline std::uint64_t lemma2_cutoff(double t) {
  return static_cast<std::uint64_t>(std::ceil(kLemma2CutoffScale / t));
}

/// f(e^{-t}) t log(1/t), summed up to cutoff_multiplier * ceil(40/t).
inline double lemma2_ratio(const PrimeTable& table, double t, std::uint64_t cutoff_multiplier = 1) {
  if (!(t > 0) || !(t < std::exp(-1.0))) throw std::invalid_argument("lemma2_ratio: t must lie in (0, 1/e)");
  const std::uint64_t cutoff = lemma2_cutoff(t) * cutoff_multiplier;
  if (cutoff > table.limit()) throw std::out_of_range("lemma2_ratio: prime table too small for cutoff 40/t");
  return odd_prime_exponential_sum(table, t, cutoff) * t * std::log(1.0 / t);
}

struct TwinPrimeConstant {
  double value = 0;       // prod over odd p <= P of (1 - 1/(p-1)^2)
  double tail_bound = 0;  // bound on |log(C_2 / value)|
};

inline constexpr double kTwinPrimeConstant = 0.6601618158;

inline TwinPrimeConstant twin_prime_constant(const PrimeTable& table, std::uint64_t prime_limit) {
  if (prime_limit < 1000) throw std::invalid_argument("twin_prime_constant: prime limit must be at least 1000");
  if (prime_limit > table.limit()) throw std::out_of_range("twin_prime_constant: prime limit above table limit");
  compensated_sum log_sum;
  for (std::uint64_t p : table.odd_primes()) {
    if (p > prime_limit) break;
    const double d = static_cast<double>(p - 1);
    log_sum.add(std::log1p(-1.0 / (d * d)));
  }
  // sum_{p > P} 1/(p-1)^2 <= sum_{k >= P} 1/k^2 <= 1/(P-1), doubled for -log(1-x) <= 2x
  return {std::exp(log_sum.value()), 2.0 / static_cast<double>(prime_limit - 1)};
}

/// prod over odd primes p | n of (p-1)/(p-2), by trial division with tabled primes.
inline double singular_factor(const PrimeTable& table, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("singular_factor: n must be positive");
  std::uint64_t rest = n;
  while (rest % 2 == 0) rest /= 2;
  double factor = 1.0;
  for (std::uint64_t p : table.odd_primes()) {
    if (p * p > rest) break;
    if (rest % p != 0) continue;
    factor *= static_cast<double>(p - 1) / static_cast<double>(p - 2);
    while (rest % p == 0) rest /= p;
  }
  if (rest > 1) {
    const auto primes = table.primes();
    const std::uint64_t largest = primes.back();
    if (largest * largest < rest && rest > table.limit())
      throw std::out_of_range("singular_factor: factorization exceeds prime table");
    factor *= static_cast<double>(rest - 1) / static_cast<double>(rest - 2);
  }
  return factor;
}

namespace detail {

template <typename F>
double simpson_step(const F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                    int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature to an absolute tolerance.
template <typename F>
double adaptive_simpson(const F& f, double a, double b, double abs_tol, int max_depth = 48) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

inline constexpr double kQuadratureRelTol = 1e-6;

/// Integral of 1/log^2(u) over [2, n].
inline double li2_integral(double n) {
  if (!(n > 2)) throw std::invalid_argument("li2_integral: upper limit must exceed 2");
  auto g = [](double u) {
    const double l = std::log(u);
    return 1.0 / (l * l);
  };
  // the integral exceeds (n-2)/log^2(n), which sets the absolute tolerance
  const double lower = (n - 2.0) * g(n);
  return adaptive_simpson(g, 2.0, n, kQuadratureRelTol * lower);
}

struct HlPrediction {
  std::uint64_t n = 0;
  double singular_factor = 1;
  double li2_integral = 0;
  double predicted = 0;        // 2 C_2 * singular_factor * integral form
  double crude_predicted = 0;  // 2 C_2 * singular_factor * n / log^2 n
};

inline HlPrediction hl_prediction(const PrimeTable& table, std::uint64_t n, double c2) {
  if (n < 6 || n % 2 != 0) throw std::invalid_argument("hl_prediction: n must be even and at least 6");
  HlPrediction h;
  h.n = n;
  h.singular_factor = pp::singular_factor(table, n);
  h.li2_integral = li2_integral(static_cast<double>(n));
  h.predicted = 2.0 * c2 * h.singular_factor * h.li2_integral;
  const double ln = std::log(static_cast<double>(n));
  h.crude_predicted = 2.0 * c2 * h.singular_factor * static_cast<double>(n) / (ln * ln);
  return h;
}

inline double hardy_ramanujan_denominator(std::uint64_t n) {
  const double x = static_cast<double>(n);
  return 2.0 * std::numbers::pi * std::sqrt(x / (3.0 * std::log(x)));
}

/// log Q(n) / (2 pi sqrt(n / (3 log n))).
inline double hardy_ramanujan_ratio(std::span<const big_int> qtotal, std::uint64_t n) {
  if (n >= qtotal.size()) throw std::out_of_range("hardy_ramanujan_ratio: n outside table");
  if (qtotal[n] == 0) throw undefined_input_error("hardy_ramanujan_ratio: Q(" + std::to_string(n) + ") = 0");
  if (n < 2) throw undefined_input_error("hardy_ramanujan_ratio: n must be at least 2");
  return log_big(qtotal[n]) / hardy_ramanujan_denominator(n);
}

}  // namespace pp
