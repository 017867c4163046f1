#pragma once

// Exact uniform sampling of partitions into m odd prime parts whose size is
// at most n, by two-stage unranking: the size comes from inverting the
// prefix sums of a CountTable, the multiset from a countWithMin table.
// Also: exact finite-n size distributions and Kolmogorov-Smirnov distances
// against them and against the limit law F(u) = u^m.

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"
#include "pp/count_table.hpp"
#include "pp/error.hpp"
#include "pp/primes.hpp"
#include "pp/uint128.hpp"

namespace pp {

/// Reproducible random stream: mt19937_64 seeded with
/// std::seed_seq{seed lo32, seed hi32, stream lo32, stream hi32}.
/// Distinct stream ids give the independent streams used for parallel work.
class rng_stream {
 public:
  explicit rng_stream(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound) by rejection; exact for every bound.
  u128 uniform_below(u128 bound) {
    if (bound == 0) throw std::invalid_argument("uniform_below: empty range");
    if (bound >> 64 == 0) {
      const auto b = static_cast<std::uint64_t>(bound);
      const std::uint64_t skip = (~b + 1) % b;  // 2^64 mod b
      for (;;) {
        const std::uint64_t x = next();
        if (x >= skip) return x % b;
      }
    }
    const int bits = 128 - __builtin_clzll(static_cast<std::uint64_t>(bound >> 64));
    const u128 mask = bits == 128 ? kU128Max : ((u128{1} << bits) - 1);
    for (;;) {
      const u128 x = ((static_cast<u128>(next()) << 64) | next()) & mask;
      if (x < bound) return x;
    }
  }

  /// Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

struct PartitionSample {
  std::uint64_t size = 0;
  std::vector<std::uint64_t> parts;  // nondecreasing odd primes summing to size

  friend bool operator==(const PartitionSample&, const PartitionSample&) = default;
  friend auto operator<=>(const PartitionSample&, const PartitionSample&) = default;
};

namespace detail {

// Smallest size s with prefix[s] > index, and the index within that size.
inline std::pair<std::uint64_t, u128> locate_size(const CountTable& counts, u128 index) {
  const auto prefix = counts.prefixes();
  const auto it = std::upper_bound(prefix.begin(), prefix.end(), index);
  if (it == prefix.end()) throw std::out_of_range("unrank: index beyond the class size");
  const auto size = static_cast<std::uint64_t>(it - prefix.begin());
  const u128 before = size == 0 ? 0 : prefix[size - 1];
  return {size, index - before};
}

}  // namespace detail

/// The Goldbach partition of rank `index` in [0, S(2n)): sizes ascending,
/// then pairs (p, s-p) by ascending smaller part p.
inline PartitionSample unrank_goldbach(const CountTable& counts, const PrimeTable& table, u128 index) {
  if (counts.m() != 2) throw std::invalid_argument("unrank_goldbach: count table must have m = 2");
  if (counts.n() > table.limit()) throw std::out_of_range("unrank_goldbach: prime table smaller than range");
  const auto [size, local] = detail::locate_size(counts, index);
  u128 seen = 0;
  for (std::uint64_t p : table.odd_primes()) {
    if (2 * p > size) break;
    const std::uint64_t rest = size - p;
    if (rest % 2 == 1 && table.is_prime(rest)) {
      if (seen == local) return {size, {p, rest}};
      ++seen;
    }
  }
  throw consistency_error("unrank_goldbach: count table disagrees with prime table at size " +
                          std::to_string(size));
}

/// One partition drawn uniformly from Sigma_{2n}, n = counts.n() / 2.
inline PartitionSample sample_goldbach(const CountTable& counts, const PrimeTable& table, rng_stream& rng) {
  if (counts.m() != 2) throw std::invalid_argument("sample_goldbach: count table must have m = 2");
  const u128 total = counts.prefix(counts.n());
  if (total == 0) throw std::invalid_argument("sample_goldbach: no Goldbach partitions in range");
  return unrank_goldbach(counts, table, rng.uniform_below(total));
}

inline constexpr double kDefaultUnrankBudget = 2e7;  // table entries

/// countWithMin(j, s, i): number of j-part multisets of odd primes summing
/// to s with every part >= primes[i]. Level 1 is a primality test; levels
/// 2..m-1 are tabulated with countWithMin(j, s, i) = countWithMin(j, s, i+1)
/// + countWithMin(j-1, s - p_i, i).
class MultisetCounter {
 public:
  MultisetCounter(const PrimeTable& table, unsigned max_level, std::uint64_t n,
                  double budget = kDefaultUnrankBudget)
      : table_(&table), n_(n), levels_(max_level + 1) {
    if (max_level == 0) throw std::invalid_argument("MultisetCounter: level must be positive");
    if (n > table.limit()) throw std::out_of_range("MultisetCounter: n above prime table limit");
    const auto all = table.odd_primes();
    primes_.assign(all.begin(), std::upper_bound(all.begin(), all.end(), n));

    double entries = 0;
    for (unsigned j = 2; j <= max_level; ++j)
      for (std::uint64_t p : primes_) {
        if (j * p > n) break;
        entries += static_cast<double>(n - j * p + 1);
      }
    if (entries > budget)
      throw resource_limit_error("MultisetCounter: " + std::to_string(entries) + " entries exceed budget");

    for (unsigned j = 2; j <= max_level; ++j) {
      level& lv = levels_[j];
      lv.offset.assign(primes_.size() + 1, 0);
      std::size_t rows = 0;
      while (rows < primes_.size() && j * primes_[rows] <= n) ++rows;
      lv.rows = rows;
      for (std::size_t i = 0; i < rows; ++i) lv.offset[i + 1] = lv.offset[i] + (n - j * primes_[i] + 1);
      lv.data.assign(lv.offset[rows], 0);
      for (std::size_t i = rows; i-- > 0;) {
        const std::uint64_t p = primes_[i];
        for (std::uint64_t s = j * p; s <= n; ++s) {
          const u128 v = checked_add(count(j, s, i + 1), count(j - 1, s - p, i), "countWithMin");
          lv.data[lv.offset[i] + (s - j * p)] = v;
        }
      }
    }
  }

  std::span<const std::uint64_t> primes() const noexcept { return primes_; }
  std::uint64_t n() const noexcept { return n_; }
  unsigned max_level() const noexcept { return static_cast<unsigned>(levels_.size() - 1); }

  u128 count(unsigned j, std::uint64_t s, std::size_t i) const {
    if (i >= primes_.size() || s > n_) return 0;
    const std::uint64_t p = primes_[i];
    if (j == 1) return s >= p && s % 2 == 1 && table_->is_prime(s) ? 1 : 0;
    const level& lv = levels_.at(j);
    if (i >= lv.rows || s < j * p) return 0;
    return lv.data[lv.offset[i] + (s - j * p)];
  }

 private:
  struct level {
    std::size_t rows = 0;
    std::vector<std::size_t> offset;
    std::vector<u128> data;
  };

  const PrimeTable* table_;
  std::uint64_t n_;
  std::vector<std::uint64_t> primes_;
  std::vector<level> levels_;
};

/// Uniform sampler over Sigma_{m,n}: partitions of sizes k <= n into m odd primes.
class MultisetSampler {
 public:
  MultisetSampler(const CountTable& counts, const PrimeTable& table, double budget = kDefaultUnrankBudget)
      : counts_(&counts), counter_(table, std::max(1u, counts.m() - 1), counts.n(), budget) {
    if (counts.m() >= 3 || (counts.m() == 2 && counts.n() <= 20000)) {
      // countWithMin must reproduce the count table it is paired with
      for (std::uint64_t k = 0; k <= counts.n(); ++k)
        if (top_count(k) != counts.q(k))
          throw consistency_error("MultisetSampler: countWithMin disagrees with Q_m(" + std::to_string(k) + ")");
    }
  }

  unsigned m() const noexcept { return counts_->m(); }
  u128 total() const { return counts_->prefix(counts_->n()); }

  /// Partition of rank index in [0, total()): sizes ascending, then
  /// lexicographic by nondecreasing parts.
  PartitionSample unrank(u128 index) const {
    const auto [size, local_in] = detail::locate_size(*counts_, index);
    u128 local = local_in;
    PartitionSample out{size, {}};
    const auto primes = counter_.primes();
    std::uint64_t rest = size;
    std::size_t from = 0;
    for (unsigned level = m(); level >= 2; --level) {
      bool chosen = false;
      for (std::size_t i = from; i < primes.size() && level * primes[i] <= rest; ++i) {
        const u128 w = counter_.count(level - 1, rest - primes[i], i);
        if (local < w) {
          out.parts.push_back(primes[i]);
          rest -= primes[i];
          from = i;
          chosen = true;
          break;
        }
        local -= w;
      }
      if (!chosen) throw consistency_error("MultisetSampler: unranking ran past the class");
    }
    if (local != 0 || counter_.count(1, rest, from) != 1)
      throw consistency_error("MultisetSampler: final part is not a valid odd prime");
    out.parts.push_back(rest);
    return out;
  }

  PartitionSample operator()(rng_stream& rng) const {
    const u128 t = total();
    if (t == 0) throw std::invalid_argument("MultisetSampler: empty class");
    return unrank(rng.uniform_below(t));
  }

 private:
  u128 top_count(std::uint64_t k) const {
    const unsigned m = counts_->m();
    u128 sum = 0;
    const auto primes = counter_.primes();
    for (std::size_t i = 0; i < primes.size() && m * primes[i] <= k; ++i)
      sum = checked_add(sum, counter_.count(m - 1, k - primes[i], i), "countWithMin");
    return sum;
  }

  const CountTable* counts_;
  MultisetCounter counter_;
};

/// One partition drawn uniformly from Sigma_{m,n}; builds the unranking
/// tables on every call, so prefer MultisetSampler for repeated draws.
inline PartitionSample sample_mpart(const CountTable& counts, const PrimeTable& table, rng_stream& rng) {
  if (counts.prefix(counts.n()) == 0) throw std::invalid_argument("sample_mpart: empty class");
  return MultisetSampler(counts, table)(rng);
}

/// T draws: indices are taken sequentially from rng, then unranked on
/// `threads` workers; the result does not depend on the thread count.
template <typename Unranker>
std::vector<PartitionSample> sample_many(const Unranker& unrank, u128 total, rng_stream& rng, std::size_t count,
                                         unsigned threads = 1) {
  if (total == 0) throw std::invalid_argument("sample_many: empty class");
  std::vector<u128> idx(count);
  for (auto& i : idx) i = rng.uniform_below(total);
  std::vector<PartitionSample> out(count);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  {
    std::vector<std::jthread> workers;
    const std::size_t chunk = (count + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w)
      workers.emplace_back([&, w] {
        for (std::size_t i = w * chunk; i < std::min(count, (w + 1) * chunk); ++i) out[i] = unrank(idx[i]);
      });
  }
  return out;
}

/// F(u) = 0 (u <= 0), u^m (0 < u < 1), 1 (u >= 1).
struct LimitCdf {
  unsigned m = 2;
  double operator()(double u) const {
    if (u <= 0) return 0.0;
    if (u >= 1) return 1.0;
    return std::pow(u, static_cast<double>(m));
  }
};

/// P(size <= s) under the uniform measure on the class described by counts.
struct ExactSizeCdf {
  const CountTable* counts = nullptr;
  double at_size(std::int64_t s) const {
    if (s < 0) return 0.0;
    const u128 total = counts->prefix(counts->n());
    const auto k = std::min<std::uint64_t>(static_cast<std::uint64_t>(s), counts->n());
    return to_double(counts->prefix(k)) / to_double(total);
  }
};

/// P(X_n / n <= u) = S(2 floor(un)) / S(2n) for m = 2, range 2n; and
/// |Sigma_{m, floor(un)}| / |Sigma_{m,n}| for general m, range n.
inline double exact_size_cdf(const CountTable& counts, double u) {
  const u128 total = counts.prefix(counts.n());
  if (total == 0) throw std::invalid_argument("exact_size_cdf: empty class");
  if (u >= 1) return 1.0;
  if (u <= 0) return 0.0;
  std::uint64_t bound;
  if (counts.m() == 2) {
    const std::uint64_t n = counts.n() / 2;
    const auto big_n = static_cast<std::uint64_t>(std::floor(u * static_cast<double>(n)));
    if (big_n <= 2) return 0.0;
    bound = 2 * big_n;
  } else {
    bound = static_cast<std::uint64_t>(std::floor(u * static_cast<double>(counts.n())));
  }
  return to_double(counts.prefix(bound)) / to_double(total);
}

struct KsReport {
  std::size_t samples = 0;
  double statistic = 0;
  double threshold = 0;
  double alpha = 0.01;
  std::string reference;

  bool passed() const { return statistic <= threshold; }
};

inline constexpr double kKsCriticalValue = 1.63;  // alpha ~ 0.01

using KsReference = std::variant<LimitCdf, ExactSizeCdf>;

/// Two-sided sup distance between the empirical CDF of size/scale and the
/// reference. Exact references are step functions in the integer size, so
/// both one-sided limits are compared at every distinct sample size.
inline KsReport ks_statistic(std::span<const PartitionSample> samples, std::uint64_t scale,
                             const KsReference& reference) {
  if (samples.empty()) throw std::invalid_argument("ks_statistic: no samples");
  if (scale == 0) throw std::invalid_argument("ks_statistic: scale must be positive");
  std::vector<std::uint64_t> sizes;
  sizes.reserve(samples.size());
  for (const auto& s : samples) sizes.push_back(s.size);
  std::sort(sizes.begin(), sizes.end());

  auto right = [&](std::uint64_t s) {
    if (const auto* lim = std::get_if<LimitCdf>(&reference))
      return (*lim)(static_cast<double>(s) / static_cast<double>(scale));
    return std::get<ExactSizeCdf>(reference).at_size(static_cast<std::int64_t>(s));
  };
  auto left = [&](std::uint64_t s) {
    if (const auto* lim = std::get_if<LimitCdf>(&reference))
      return (*lim)(static_cast<double>(s) / static_cast<double>(scale));
    return std::get<ExactSizeCdf>(reference).at_size(static_cast<std::int64_t>(s) - 1);
  };

  const auto total = static_cast<double>(sizes.size());
  double d = 0;
  std::size_t i = 0;
  while (i < sizes.size()) {
    std::size_t j = i;
    while (j < sizes.size() && sizes[j] == sizes[i]) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / total - left(sizes[i])));
    d = std::max(d, std::abs(static_cast<double>(j) / total - right(sizes[i])));
    i = j;
  }

  KsReport rep;
  rep.samples = sizes.size();
  rep.statistic = d;
  rep.threshold = kKsCriticalValue / std::sqrt(total);
  if (const auto* lim = std::get_if<LimitCdf>(&reference))
    rep.reference = "limit u^" + std::to_string(lim->m);
  else
    rep.reference = "exact";
  return rep;
}

inline nlohmann::json to_json(const KsReport& r) {
  return {{"T", r.samples}, {"D", r.statistic}, {"threshold", r.threshold}, {"alpha", r.alpha},
          {"reference", r.reference}};
}

struct ChiSquareResult {
  double statistic = 0;
  std::size_t dof = 0;
  double p_value = 1;
};

/// Pearson goodness of fit of observed category counts to the uniform law.
inline ChiSquareResult chi_square_uniform(std::span<const std::uint64_t> observed) {
  if (observed.size() < 2) throw std::invalid_argument("chi_square_uniform: need at least two categories");
  double n = 0;
  for (auto o : observed) n += static_cast<double>(o);
  const double expected = n / static_cast<double>(observed.size());
  double stat = 0;
  for (auto o : observed) {
    const double d = static_cast<double>(o) - expected;
    stat += d * d / expected;
  }
  ChiSquareResult r;
  r.statistic = stat;
  r.dof = observed.size() - 1;
  r.p_value = boost::math::gamma_q(0.5 * static_cast<double>(r.dof), 0.5 * stat);
  return r;
}

inline void write_csv(std::ostream& os, std::span<const PartitionSample> samples, unsigned m) {
  os << "size";
  for (unsigned j = 1; j <= m; ++j) os << ",part_" << j;
  os << '\n';
  for (const auto& s : samples) {
    os << s.size;
    for (auto p : s.parts) os << ',' << p;
    os << '\n';
  }
}

}  // namespace pp
