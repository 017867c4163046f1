#pragma once

// Prime tables from a segmented sieve of Eratosthenes.
//
// A PrimeTable is indexed by integer (is_prime(k) for 0 <= k <= limit) but
// only odd numbers are stored: bit i of the packed array stands for 2i+1.

#include <algorithm>
#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "pp/error.hpp"

namespace pp {

struct sieve_options {
  // Numbers per segment; rounded up to a multiple of 128.
  std::uint64_t segment_size = std::uint64_t{1} << 20;
  // Limits above this are sieved segment by segment.
  std::uint64_t segmented_above = std::uint64_t{1} << 20;
  std::uint64_t hard_cap = std::uint64_t{1} << 33;
};

class PrimeTable {
 public:
  PrimeTable() = default;

  std::uint64_t limit() const noexcept { return limit_; }

  bool is_prime(std::uint64_t k) const {
    if (k > limit_) throw std::out_of_range("is_prime: argument above table limit");
    return test(k);
  }

  /// Ascending list of all primes <= limit (including 2).
  std::span<const std::uint64_t> primes() const noexcept { return primes_; }

  /// Odd primes only, i.e. primes() without its leading 2.
  std::span<const std::uint64_t> odd_primes() const noexcept {
    return primes_.empty() ? std::span<const std::uint64_t>{}
                           : std::span<const std::uint64_t>(primes_).subspan(1);
  }

  /// Number of primes <= y.
  template <std::integral I>
  std::uint64_t pi(I y_in) const {
    if constexpr (std::is_signed_v<I>) {
      if (y_in < 0) return 0;
    }
    const auto y = static_cast<std::uint64_t>(y_in);
    if (y > limit_) throw std::out_of_range("pi: argument above table limit");
    if (y < 2) return 0;
    if (y < 3) return 1;
    // odd numbers 1, 3, ..., y' <= y occupy bits [0, (y-1)/2]
    const std::uint64_t last = (y - 1) / 2;
    const std::uint64_t word = last / 64;
    const unsigned bit = static_cast<unsigned>(last % 64);
    const std::uint64_t mask = bit == 63 ? ~std::uint64_t{0} : ((std::uint64_t{1} << (bit + 1)) - 1);
    return 1 + rank_[word] + static_cast<std::uint64_t>(std::popcount(odd_bits_[word] & mask));
  }

  /// pi for a real argument, read as pi(floor(y)).
  template <std::floating_point F>
  std::uint64_t pi(F y) const {
    if (std::isnan(y)) throw std::invalid_argument("pi: NaN argument");
    if (y < 0) return 0;
    if (y > static_cast<double>(limit_)) throw std::out_of_range("pi: argument above table limit");
    return pi(static_cast<std::uint64_t>(std::floor(static_cast<double>(y))));
  }

  /// Bit k set iff k is an odd prime, 0 <= k <= n.
  std::vector<bool> odd_prime_indicator(std::uint64_t n) const {
    if (n > limit_) throw std::out_of_range("odd_prime_indicator: n above table limit");
    std::vector<bool> bits(n + 1, false);
    for (std::uint64_t p : odd_primes()) {
      if (p > n) break;
      bits[p] = true;
    }
    return bits;
  }

  friend bool operator==(const PrimeTable& a, const PrimeTable& b) {
    return a.limit_ == b.limit_ && a.odd_bits_ == b.odd_bits_;
  }

  /// Packed odd-number bits; bit i stands for 2i+1.
  std::span<const std::uint64_t> odd_bits() const noexcept { return odd_bits_; }

  friend PrimeTable sieve_upto(std::uint64_t n, const sieve_options& opts);
  friend std::optional<PrimeTable> load_prime_cache(const std::filesystem::path& path,
                                                    std::uint64_t expected_limit);

 private:
  bool test(std::uint64_t k) const noexcept {
    if (k == 2) return true;
    if ((k & 1) == 0) return false;
    const std::uint64_t i = k >> 1;
    return (odd_bits_[i >> 6] >> (i & 63)) & 1;
  }

  void finish() {
    // clear padding bits beyond the limit so popcounts stay exact
    const std::uint64_t valid = (limit_ + 1) / 2;  // count of odd numbers <= limit
    for (std::uint64_t i = valid; i < odd_bits_.size() * 64; ++i)
      odd_bits_[i >> 6] &= ~(std::uint64_t{1} << (i & 63));
    rank_.assign(odd_bits_.size(), 0);
    std::uint64_t running = 0;
    for (std::size_t w = 0; w < odd_bits_.size(); ++w) {
      rank_[w] = running;
      running += static_cast<std::uint64_t>(std::popcount(odd_bits_[w]));
    }
    primes_.clear();
    primes_.reserve(running + 1);
    primes_.push_back(2);
    for (std::size_t w = 0; w < odd_bits_.size(); ++w) {
      std::uint64_t word = odd_bits_[w];
      while (word) {
        const int b = std::countr_zero(word);
        primes_.push_back(2 * (w * 64 + static_cast<std::uint64_t>(b)) + 1);
        word &= word - 1;
      }
    }
  }

  std::uint64_t limit_ = 0;
  std::vector<std::uint64_t> odd_bits_;
  std::vector<std::uint64_t> rank_;  // popcount of all words before index w
  std::vector<std::uint64_t> primes_;
};

namespace detail {

inline void clear_odd_bit(std::vector<std::uint64_t>& bits, std::uint64_t number) {
  const std::uint64_t i = number >> 1;
  bits[i >> 6] &= ~(std::uint64_t{1} << (i & 63));
}

// Clears odd composites in [lo, hi) using odd base primes; lo is odd-aligned.
inline void cross_off(std::vector<std::uint64_t>& bits, std::span<const std::uint64_t> base,
                      std::uint64_t lo, std::uint64_t hi) {
  for (std::uint64_t p : base) {
    if (p * p >= hi) break;
    std::uint64_t start = std::max(p * p, ((lo + p - 1) / p) * p);
    if ((start & 1) == 0) start += p;
    for (std::uint64_t k = start; k < hi; k += 2 * p) clear_odd_bit(bits, k);
  }
}

inline std::vector<std::uint64_t> small_odd_primes(std::uint64_t n) {
  std::vector<char> composite(n + 1, 0);
  std::vector<std::uint64_t> out;
  for (std::uint64_t k = 3; k <= n; k += 2) {
    if (composite[k]) continue;
    out.push_back(k);
    for (std::uint64_t j = k * k; j <= n; j += 2 * k) composite[j] = 1;
  }
  return out;
}

}  // namespace detail

inline PrimeTable sieve_upto(std::uint64_t n, const sieve_options& opts = {}) {
  if (n < 2) throw std::invalid_argument("sieve_upto: limit must be at least 2");
  if (n > opts.hard_cap)
    throw resource_limit_error("sieve_upto: limit " + std::to_string(n) + " above hard cap " +
                               std::to_string(opts.hard_cap));

  PrimeTable t;
  t.limit_ = n;
  const std::uint64_t odd_count = (n + 1) / 2 + 1;
  t.odd_bits_.assign((odd_count + 63) / 64, ~std::uint64_t{0});
  detail::clear_odd_bit(t.odd_bits_, 1);

  auto root = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
  while (root * root > n) --root;
  while ((root + 1) * (root + 1) <= n) ++root;
  const auto base = detail::small_odd_primes(root);

  if (n <= opts.segmented_above) {
    detail::cross_off(t.odd_bits_, base, 3, n + 1);
  } else {
    const std::uint64_t seg = std::max<std::uint64_t>(128, (opts.segment_size + 127) / 128 * 128);
    for (std::uint64_t lo = 1; lo <= n; lo += seg)
      detail::cross_off(t.odd_bits_, base, lo, std::min(n + 1, lo + seg));
  }
  t.finish();
  return t;
}

// On-disk cache: "PPL1", u32 version, u64 limit, then the index-by-integer
// primality bits packed LSB-first into ceil((limit+1)/8) bytes.

inline constexpr std::uint32_t kPrimeCacheVersion = 1;

namespace detail {

template <typename T>
void put_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
bool get_le(std::istream& is, T& v) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) return false;
  v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return true;
}

}  // namespace detail

inline void save_prime_cache(const PrimeTable& t, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open prime cache for writing: " + path.string());
  os.write("PPL1", 4);
  detail::put_le<std::uint32_t>(os, kPrimeCacheVersion);
  detail::put_le<std::uint64_t>(os, t.limit());
  std::vector<unsigned char> bytes((t.limit() + 8) / 8, 0);
  for (std::uint64_t p : t.primes()) bytes[p >> 3] |= static_cast<unsigned char>(1u << (p & 7));
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("failed writing prime cache: " + path.string());
}

/// Returns nullopt for a missing, stale or malformed cache file.
inline std::optional<PrimeTable> load_prime_cache(const std::filesystem::path& path,
                                                  std::uint64_t expected_limit) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t limit = 0;
  if (!is.read(magic, 4) || std::memcmp(magic, "PPL1", 4) != 0) return std::nullopt;
  if (!detail::get_le(is, version) || version != kPrimeCacheVersion) return std::nullopt;
  if (!detail::get_le(is, limit) || limit != expected_limit || limit < 2) return std::nullopt;
  std::vector<unsigned char> bytes((limit + 8) / 8);
  if (!is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
    return std::nullopt;
  if (is.peek() != std::char_traits<char>::eof()) return std::nullopt;

  PrimeTable t;
  t.limit_ = limit;
  const std::uint64_t odd_count = (limit + 1) / 2 + 1;
  t.odd_bits_.assign((odd_count + 63) / 64, 0);
  for (std::uint64_t k = 0; k <= limit; ++k) {
    if (!((bytes[k >> 3] >> (k & 7)) & 1)) continue;
    if (k % 2 == 0) {
      if (k != 2) return std::nullopt;
      continue;
    }
    const std::uint64_t i = k >> 1;
    t.odd_bits_[i >> 6] |= std::uint64_t{1} << (i & 63);
  }
  if (!((bytes[0] >> 2) & 1)) return std::nullopt;
  t.finish();
  return t;
}

}  // namespace pp
