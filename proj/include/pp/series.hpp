#pragma once

// Exact truncated power series with nonnegative 128-bit coefficients, the
// odd-prime series f(z) = sum_p z^p and the complete Bell polynomial that
// yields m! * sum_k Q_m(k) z^k.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pp/count_table.hpp"
#include "pp/error.hpp"
#include "pp/ntt.hpp"
#include "pp/primes.hpp"
#include "pp/uint128.hpp"

namespace pp {

class TruncatedSeries {
 public:
  /// The zero series with coefficients c_0..c_D.
  explicit TruncatedSeries(std::uint64_t degree_bound) : coeffs_(checked_len(degree_bound), 0) {}

  TruncatedSeries(std::uint64_t degree_bound, std::vector<u128> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != checked_len(degree_bound))
      throw std::invalid_argument("TruncatedSeries: expected degree_bound+1 coefficients");
  }

  std::uint64_t degree_bound() const noexcept { return coeffs_.size() - 1; }
  u128 operator[](std::uint64_t k) const { return coeffs_.at(k); }
  std::span<const u128> coeffs() const noexcept { return coeffs_; }

  bool is_zero() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](u128 c) { return c == 0; });
  }

  friend bool operator==(const TruncatedSeries&, const TruncatedSeries&) = default;

 private:
  static std::size_t checked_len(std::uint64_t d) {
    if (d == 0) throw std::invalid_argument("TruncatedSeries: degree bound must be positive");
    return static_cast<std::size_t>(d) + 1;
  }

  std::vector<u128> coeffs_;
};

/// f(z) = sum over odd primes p <= D of z^p.
inline TruncatedSeries f_series(const PrimeTable& table, std::uint64_t degree) {
  if (degree > table.limit()) throw std::out_of_range("f_series: degree above prime table limit");
  std::vector<u128> c(degree + 1, 0);
  for (std::uint64_t p : table.odd_primes()) {
    if (p > degree) break;
    c[p] = 1;
  }
  return {degree, std::move(c)};
}

/// s(z^j), truncated at the same degree bound.
inline TruncatedSeries substitute_power(const TruncatedSeries& s, std::uint64_t j) {
  if (j == 0) throw std::invalid_argument("substitute_power: exponent must be positive");
  const std::uint64_t d = s.degree_bound();
  std::vector<u128> c(d + 1, 0);
  for (std::uint64_t k = 0; k * j <= d; ++k) c[k * j] = s[k];
  return {d, std::move(c)};
}

inline TruncatedSeries add(const TruncatedSeries& a, const TruncatedSeries& b) {
  if (a.degree_bound() != b.degree_bound()) throw std::invalid_argument("add: degree bounds differ");
  std::vector<u128> c(a.degree_bound() + 1);
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = checked_add(a[k], b[k], "series coefficient");
  return {a.degree_bound(), std::move(c)};
}

inline TruncatedSeries scale(const TruncatedSeries& s, u128 factor) {
  std::vector<u128> c(s.degree_bound() + 1);
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = checked_mul(s[k], factor, "series coefficient");
  return {s.degree_bound(), std::move(c)};
}

/// O(D^2) Cauchy product with per-term overflow checks.
inline TruncatedSeries multiply_schoolbook(const TruncatedSeries& a, const TruncatedSeries& b) {
  if (a.degree_bound() != b.degree_bound()) throw std::invalid_argument("multiply: degree bounds differ");
  const std::uint64_t d = a.degree_bound();
  std::vector<u128> c(d + 1, 0);
  for (std::uint64_t i = 0; i <= d; ++i) {
    if (a[i] == 0) continue;
    for (std::uint64_t j = 0; i + j <= d; ++j) {
      if (b[j] == 0) continue;
      c[i + j] = checked_add(c[i + j], checked_mul(a[i], b[j], "series product"), "series product");
    }
  }
  return {d, std::move(c)};
}

namespace detail {

// log2 of an upper bound on any product coefficient: min(sum a * max b, sum b * max a).
inline double product_log2_bound(std::span<const u128> a, std::span<const u128> b) {
  long double sa = 0, sb = 0, ma = 0, mb = 0;
  for (u128 x : a) {
    const auto v = static_cast<long double>(x);
    sa += v;
    ma = std::max(ma, v);
  }
  for (u128 x : b) {
    const auto v = static_cast<long double>(x);
    sb += v;
    mb = std::max(mb, v);
  }
  const long double bound = std::min(sa * mb, sb * ma);
  if (bound < 1) return 0;
  // small relative slack for rounding in the long double sums
  return static_cast<double>(std::log2(bound)) + 1e-6;
}

inline std::span<const u128> trim_trailing_zeros(std::span<const u128> s) {
  std::size_t n = s.size();
  while (n > 0 && s[n - 1] == 0) --n;
  return s.first(n);
}

}  // namespace detail

/// Exact product via number-theoretic transforms (any degree bound).
inline TruncatedSeries multiply_ntt(const TruncatedSeries& a, const TruncatedSeries& b) {
  if (a.degree_bound() != b.degree_bound()) throw std::invalid_argument("multiply: degree bounds differ");
  const std::uint64_t d = a.degree_bound();
  const bool same = &a == &b;
  const auto sa = detail::trim_trailing_zeros(a.coeffs());
  const auto sb = same ? sa : detail::trim_trailing_zeros(b.coeffs());
  if (sa.empty() || sb.empty()) return TruncatedSeries(d);
  auto c = ntt::convolve_exact(sa, sb, d + 1, detail::product_log2_bound(sa, sb));
  return {d, std::move(c)};
}

inline constexpr std::uint64_t kSchoolbookMaxDegree = 512;

/// Exact truncated Cauchy product; schoolbook up to degree 512, transforms above.
inline TruncatedSeries multiply(const TruncatedSeries& a, const TruncatedSeries& b) {
  if (a.degree_bound() != b.degree_bound()) throw std::invalid_argument("multiply: degree bounds differ");
  if (a.degree_bound() <= kSchoolbookMaxDegree) return multiply_schoolbook(a, b);
  return multiply_ntt(a, b);
}

/// One term of the complete Bell polynomial B_m: multiplier * prod_j beta_j^{k_j}.
struct BellTermSpec {
  unsigned m = 0;
  std::vector<unsigned> exponents;  // exponents[j-1] = k_j
  u128 multiplier = 0;
};

inline u128 factorial(unsigned n) {
  u128 r = 1;
  for (unsigned i = 2; i <= n; ++i) r = checked_mul(r, i, "factorial");
  return r;
}

inline constexpr unsigned kMaxBellParts = 8;

/// All exponent tuples with sum_j j*k_j = m, with multiplier m!/prod(k_j! (j!)^{k_j}).
inline std::vector<BellTermSpec> bell_terms(unsigned m) {
  if (m == 0 || m > 20) throw std::invalid_argument("bell_terms: m out of range");
  std::vector<BellTermSpec> out;
  std::vector<unsigned> k(m, 0);
  // enumerate partitions of m by choosing k_j from the largest part down
  auto rec = [&](auto&& self, unsigned j, unsigned remaining) -> void {
    if (j == 0) {
      if (remaining != 0) return;
      u128 denom = 1;
      for (unsigned i = 1; i <= m; ++i)
        for (unsigned r = 0; r < k[i - 1]; ++r) denom = checked_mul(denom, factorial(i));
      for (unsigned i = 1; i <= m; ++i) denom = checked_mul(denom, factorial(k[i - 1]));
      const u128 num = factorial(m);
      if (num % denom != 0) throw consistency_error("bell_terms: non-integral multiplier");
      out.push_back({m, k, num / denom});
      return;
    }
    for (unsigned c = 0; c * j <= remaining; ++c) {
      k[j - 1] = c;
      self(self, j - 1, remaining - c * j);
    }
    k[j - 1] = 0;
  };
  rec(rec, m, m);
  return out;
}

/// m! * sum_k Q_m(k) z^k up to degree D, as B_m(beta_1..beta_m) with
/// beta_j = (j-1)! f(z^j), the j-th x-derivative of -sum log(1 - x z^p) at x = 0.
inline TruncatedSeries bell_qm_series(const PrimeTable& table, unsigned m, std::uint64_t degree,
                                      unsigned max_parts = kMaxBellParts) {
  if (m == 0 || m > max_parts)
    throw std::invalid_argument("bell_qm_series: m must lie in [1, " + std::to_string(max_parts) + "]");
  const TruncatedSeries f = f_series(table, degree);

  std::vector<TruncatedSeries> beta;
  beta.reserve(m);
  for (unsigned j = 1; j <= m; ++j) beta.push_back(scale(substitute_power(f, j), factorial(j - 1)));

  std::map<std::pair<unsigned, unsigned>, TruncatedSeries> powers;  // (j, e) -> beta_j^e
  auto power = [&](unsigned j, unsigned e) -> const TruncatedSeries& {
    for (unsigned have = 1; have <= e; ++have) {
      if (powers.contains({j, have})) continue;
      powers.emplace(std::pair{j, have},
                     have == 1 ? beta[j - 1] : multiply(powers.at({j, have - 1}), beta[j - 1]));
    }
    return powers.at({j, e});
  };

  TruncatedSeries total(degree);
  for (const BellTermSpec& term : bell_terms(m)) {
    std::optional<TruncatedSeries> prod;
    for (unsigned j = 1; j <= m; ++j) {
      const unsigned e = term.exponents[j - 1];
      if (e == 0) continue;
      const TruncatedSeries& pw = power(j, e);
      prod = prod ? multiply(*prod, pw) : pw;
    }
    total = add(total, scale(*prod, term.multiplier));
  }
  return total;
}

struct Lemma1Report {
  bool ok = true;
  std::uint64_t degree = 0;
  std::optional<std::uint64_t> first_mismatch;
  u128 series_value = 0;   // coefficient of f^2(z) + f(z^2)
  u128 doubled_count = 0;  // 2 * Q_2(k)
};

/// Checks f^2(z) + f(z^2) == 2 * sum_k Q_2(k) z^k coefficient by coefficient.
inline Lemma1Report verify_lemma1(const PrimeTable& table, std::uint64_t degree, const CountTable& q2) {
  if (q2.m() != 2) throw std::invalid_argument("verify_lemma1: count table must have m = 2");
  if (degree > q2.n()) throw std::out_of_range("verify_lemma1: degree above count table range");
  const TruncatedSeries f = f_series(table, degree);
  const TruncatedSeries lhs = add(multiply(f, f), substitute_power(f, 2));
  Lemma1Report rep;
  rep.degree = degree;
  for (std::uint64_t k = 0; k <= degree; ++k) {
    const u128 rhs = checked_mul(q2.q(k), 2);
    if (lhs[k] != rhs) {
      rep.ok = false;
      rep.first_mismatch = k;
      rep.series_value = lhs[k];
      rep.doubled_count = rhs;
      break;
    }
  }
  return rep;
}

inline void write_csv(std::ostream& os, const TruncatedSeries& s) {
  os << "index,coefficient\n";
  for (std::uint64_t k = 0; k <= s.degree_bound(); ++k) os << k << ',' << to_string(s[k]) << '\n';
}

}  // namespace pp
