#pragma once

// Exact counts of partitions into odd prime parts.
//
//   q2_table       Q_2 from the self-convolution of the odd-prime indicator
//   qm_table_bell  Q_m from the Bell-polynomial series
//   qm_table_dp    Q_m from the bounded-part Euler-product recurrence
//   qm_table_naive Q_m by enumerating nondecreasing prime tuples
//   q_total_table  Q(n) with an unbounded number of parts (big integers)

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pp/count_table.hpp"
#include "pp/error.hpp"
#include "pp/primes.hpp"
#include "pp/series.hpp"
#include "pp/uint128.hpp"

namespace pp {

using big_int = boost::multiprecision::cpp_int;

/// Q_2(s) for 0 <= s <= 2n. The ordered-pair count r[s] from f(z)^2 is
/// symmetrized as Q_2(s) = (r[s] + [s/2 odd prime]) / 2.
inline CountTable q2_table(const PrimeTable& table, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("q2_table: n must be positive");
  const std::uint64_t range = 2 * n;
  if (range > table.limit()) throw std::out_of_range("q2_table: 2n above prime table limit");
  const TruncatedSeries f = f_series(table, range);
  const TruncatedSeries r = multiply(f, f);
  std::vector<u128> q(range + 1, 0);
  for (std::uint64_t s = 0; s <= range; ++s) {
    u128 v = r[s];
    if (s % 2 == 0 && s / 2 % 2 == 1 && table.is_prime(s / 2)) v += 1;
    if (v % 2 != 0) throw consistency_error("q2_table: odd ordered-pair count at " + std::to_string(s));
    q[s] = v / 2;
  }
  return {2, range, std::move(q), provenance::convolution};
}

/// Q_2(s) by scanning odd primes p <= s/2 and testing s - p.
inline std::uint64_t q2_naive(const PrimeTable& table, std::uint64_t s) {
  if (s > table.limit()) throw std::out_of_range("q2_naive: s above prime table limit");
  std::uint64_t count = 0;
  for (std::uint64_t p : table.odd_primes()) {
    if (2 * p > s) break;
    const std::uint64_t rest = s - p;
    if (rest % 2 == 1 && table.is_prime(rest)) ++count;
  }
  return count;
}

inline constexpr unsigned kMaxDpParts = 8;
inline constexpr double kDefaultDpBudget = 2e10;  // pi(n) * m * n cell updates

/// Q_m(k) for k <= n: for each odd prime p ascending, ways[j][s] += ways[j-1][s-p].
inline CountTable qm_table_dp(const PrimeTable& table, unsigned m, std::uint64_t n,
                              double budget = kDefaultDpBudget) {
  if (m == 0 || m > kMaxDpParts) throw std::invalid_argument("qm_table_dp: m must lie in [1, 8]");
  if (n > table.limit()) throw std::out_of_range("qm_table_dp: n above prime table limit");
  const double cost = static_cast<double>(table.pi(n)) * m * static_cast<double>(n);
  if (cost > budget)
    throw resource_limit_error("qm_table_dp: estimated cost " + std::to_string(cost) + " exceeds budget");

  std::vector<std::vector<u128>> ways(m + 1, std::vector<u128>(n + 1, 0));
  ways[0][0] = 1;
  for (std::uint64_t p : table.odd_primes()) {
    if (p > n) break;
    for (std::uint64_t s = p; s <= n; ++s)
      for (unsigned j = 1; j <= m; ++j)
        if (ways[j - 1][s - p] != 0) ways[j][s] = checked_add(ways[j][s], ways[j - 1][s - p], "Q_m count");
  }
  return {m, n, std::move(ways[m]), provenance::dp};
}

/// Q_m(k) for k <= n from the coefficients of bell_qm_series divided by m!.
inline CountTable qm_table_bell(const PrimeTable& table, unsigned m, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("qm_table_bell: n must be positive");
  const TruncatedSeries s = bell_qm_series(table, m, n);
  const u128 mf = factorial(m);
  std::vector<u128> q(n + 1);
  for (std::uint64_t k = 0; k <= n; ++k) {
    if (s[k] % mf != 0)
      throw consistency_error("qm_table_bell: coefficient at " + std::to_string(k) + " not divisible by m!");
    q[k] = s[k] / mf;
  }
  return {m, n, std::move(q), provenance::bell};
}

inline constexpr double kDefaultNaiveBudget = 2e9;  // enumerated tuples

/// Q_m(k) for k <= n by enumerating nondecreasing m-tuples of odd primes.
inline CountTable qm_table_naive(const PrimeTable& table, unsigned m, std::uint64_t n,
                                 double budget = kDefaultNaiveBudget) {
  if (m == 0) throw std::invalid_argument("qm_table_naive: m must be positive");
  if (n > table.limit()) throw std::out_of_range("qm_table_naive: n above prime table limit");
  const auto primes = table.odd_primes();
  const auto count = static_cast<double>(table.pi(n));
  double est = 1;
  for (unsigned j = 1; j < m; ++j) est *= count / j;
  if (est > budget) throw resource_limit_error("qm_table_naive: enumeration exceeds budget");

  std::vector<u128> q(n + 1, 0);
  // depth-first over nondecreasing prime indices
  auto rec = [&](auto&& self, unsigned left, std::size_t from, std::uint64_t sum) -> void {
    if (left == 0) {
      ++q[sum];
      return;
    }
    for (std::size_t i = from; i < primes.size(); ++i) {
      if (sum + left * primes[i] > n) break;
      self(self, left - 1, i, sum + primes[i]);
    }
  };
  rec(rec, m, 0, 0);
  return {m, n, std::move(q), provenance::naive};
}

inline constexpr std::uint64_t kDefaultTotalCap = 200000;

/// Q(k) for 0 <= k <= n (Q(0) = 1), unbounded number of odd prime parts.
inline std::vector<big_int> q_total_table(const PrimeTable& table, std::uint64_t n,
                                          std::uint64_t cap = kDefaultTotalCap) {
  if (n > cap) throw resource_limit_error("q_total_table: n above configured cap");
  if (n > table.limit()) throw std::out_of_range("q_total_table: n above prime table limit");

  // Q(n) <= p(n) < exp(pi * sqrt(2n/3)) bounds the limb count.
  const double bits = std::numbers::pi * std::sqrt(2.0 * static_cast<double>(n) / 3.0) / std::log(2.0);
  const std::size_t width = static_cast<std::size_t>(bits / 64.0) + 2;
  std::vector<std::uint64_t> limbs((n + 1) * width, 0);
  std::vector<std::uint32_t> used(n + 1, 0);
  limbs[0] = 1;
  used[0] = 1;

  for (std::uint64_t p : table.odd_primes()) {
    if (p > n) break;
    for (std::uint64_t s = p; s <= n; ++s) {
      const std::uint32_t src_len = used[s - p];
      if (src_len == 0) continue;
      const std::uint64_t* src = &limbs[(s - p) * width];
      std::uint64_t* dst = &limbs[s * width];
      unsigned char carry = 0;
      std::uint32_t i = 0;
      for (; i < src_len; ++i) carry = __builtin_add_overflow(dst[i], src[i], &dst[i]) |
                                       __builtin_add_overflow(dst[i], std::uint64_t{carry}, &dst[i]);
      for (; carry; ++i) {
        if (i == width) throw consistency_error("q_total_table: limb bound exceeded");
        carry = __builtin_add_overflow(dst[i], std::uint64_t{1}, &dst[i]);
      }
      used[s] = std::max(used[s], i);
    }
  }

  std::vector<big_int> out(n + 1);
  for (std::uint64_t s = 0; s <= n; ++s) {
    const std::uint64_t* src = &limbs[s * width];
    boost::multiprecision::import_bits(out[s], src, src + std::max<std::uint32_t>(used[s], 1), 64, false);
  }
  return out;
}

/// Natural logarithm of a positive big integer.
inline double log_big(const big_int& v) {
  if (v <= 0) throw undefined_input_error("log_big: nonpositive argument");
  const std::size_t msb = boost::multiprecision::msb(v);
  if (msb < 60) return std::log(v.convert_to<double>());
  const std::size_t shift = msb - 60;
  const big_int top = v >> shift;
  return std::log(top.convert_to<double>()) + static_cast<double>(shift) * std::log(2.0);
}

// Binary cache: "PPC1", u32 version, u32 m, u64 n, u32 provenance, then
// n+1 little-endian unsigned 128-bit values.

inline constexpr std::uint32_t kCountCacheVersion = 1;

inline void save_count_cache(const CountTable& t, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open count cache for writing: " + path.string());
  os.write("PPC1", 4);
  detail::put_le<std::uint32_t>(os, kCountCacheVersion);
  detail::put_le<std::uint32_t>(os, t.m());
  detail::put_le<std::uint64_t>(os, t.n());
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.source()));
  for (u128 v : t.values()) {
    detail::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(v));
    detail::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(v >> 64));
  }
  if (!os) throw std::runtime_error("failed writing count cache: " + path.string());
}

/// Returns nullopt unless the file matches version, m, n and provenance exactly.
inline std::optional<CountTable> load_count_cache(const std::filesystem::path& path, unsigned m,
                                                  std::uint64_t n, provenance prov) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  char magic[4];
  std::uint32_t version = 0, mm = 0, pv = 0;
  std::uint64_t nn = 0;
  if (!is.read(magic, 4) || std::memcmp(magic, "PPC1", 4) != 0) return std::nullopt;
  if (!detail::get_le(is, version) || version != kCountCacheVersion) return std::nullopt;
  if (!detail::get_le(is, mm) || mm != m) return std::nullopt;
  if (!detail::get_le(is, nn) || nn != n) return std::nullopt;
  if (!detail::get_le(is, pv) || pv != static_cast<std::uint32_t>(prov)) return std::nullopt;
  std::vector<u128> q(n + 1);
  for (auto& v : q) {
    std::uint64_t lo = 0, hi = 0;
    if (!detail::get_le(is, lo) || !detail::get_le(is, hi)) return std::nullopt;
    v = (static_cast<u128>(hi) << 64) | lo;
  }
  if (is.peek() != std::char_traits<char>::eof()) return std::nullopt;
  try {
    return CountTable(m, n, std::move(q), prov);
  } catch (const consistency_error&) {
    return std::nullopt;
  }
}

inline void write_csv(std::ostream& os, const CountTable& t) {
  os << "k,q,prefix\n";
  for (std::uint64_t k = 0; k <= t.n(); ++k)
    os << k << ',' << to_string(t.q(k)) << ',' << to_string(t.prefix(k)) << '\n';
}

}  // namespace pp
