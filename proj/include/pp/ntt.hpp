#pragma once

// Exact integer convolution by number-theoretic transforms over up to five
// 62-bit primes p = c*2^32 + 1, reconstructed with Garner's algorithm.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

#include "pp/error.hpp"
#include "pp/uint128.hpp"

namespace pp::ntt {

struct ntt_prime {
  std::uint64_t modulus;
  std::uint64_t generator;
};

// All satisfy p - 1 = c * 2^32, so transform lengths up to 2^32 are supported.
inline constexpr std::array<ntt_prime, 5> kPrimes{{
    {4611685941117976577ULL, 3},
    {4611685692009873409ULL, 19},
    {4611685606110527489ULL, 3},
    {4611685318347718657ULL, 5},
    {4611685232448372737ULL, 3},
}};

inline constexpr unsigned kMaxLog2Length = 32;

class montgomery {
 public:
  explicit constexpr montgomery(std::uint64_t mod) : mod_(mod) {
    std::uint64_t inv = mod;  // Newton iteration for mod^{-1} mod 2^64
    for (int i = 0; i < 6; ++i) inv *= 2 - mod * inv;
    neg_inv_ = ~inv + 1;
    const std::uint64_t r = (~mod + 1) % mod;  // 2^64 mod p
    r2_ = static_cast<std::uint64_t>(static_cast<u128>(r) * r % mod);
  }

  constexpr std::uint64_t modulus() const { return mod_; }

  constexpr std::uint64_t reduce(u128 t) const {
    const std::uint64_t m = static_cast<std::uint64_t>(t) * neg_inv_;
    const std::uint64_t r = static_cast<std::uint64_t>((t + static_cast<u128>(m) * mod_) >> 64);
    return r >= mod_ ? r - mod_ : r;
  }
  constexpr std::uint64_t mul(std::uint64_t a, std::uint64_t b) const {
    return reduce(static_cast<u128>(a) * b);
  }
  constexpr std::uint64_t to(std::uint64_t a) const { return mul(a, r2_); }
  constexpr std::uint64_t from(std::uint64_t a) const { return reduce(a); }
  constexpr std::uint64_t add(std::uint64_t a, std::uint64_t b) const {
    const std::uint64_t s = a + b;
    return s >= mod_ ? s - mod_ : s;
  }
  constexpr std::uint64_t sub(std::uint64_t a, std::uint64_t b) const {
    return a >= b ? a - b : a + mod_ - b;
  }
  constexpr std::uint64_t pow(std::uint64_t base_m, std::uint64_t e) const {
    std::uint64_t r = to(1);
    while (e) {
      if (e & 1) r = mul(r, base_m);
      base_m = mul(base_m, base_m);
      e >>= 1;
    }
    return r;
  }

 private:
  std::uint64_t mod_;
  std::uint64_t neg_inv_ = 0;
  std::uint64_t r2_ = 0;
};

inline std::uint64_t mod_pow(std::uint64_t b, std::uint64_t e, std::uint64_t m) {
  u128 r = 1, x = b % m;
  while (e) {
    if (e & 1) r = r * x % m;
    x = x * x % m;
    e >>= 1;
  }
  return static_cast<std::uint64_t>(r);
}

// In-place transform of Montgomery-form data; length is a power of two.
inline void transform(std::vector<std::uint64_t>& a, const montgomery& mg, std::uint64_t generator,
                      bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const std::uint64_t p = mg.modulus();
  std::vector<std::uint64_t> w(n / 2 + 1);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    std::uint64_t root = mod_pow(generator, (p - 1) / len, p);
    if (inverse) root = mod_pow(root, p - 2, p);
    const std::uint64_t root_m = mg.to(root);
    const std::size_t half = len / 2;
    w[0] = mg.to(1);
    for (std::size_t k = 1; k < half; ++k) w[k] = mg.mul(w[k - 1], root_m);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const std::uint64_t u = a[i + k];
        const std::uint64_t v = mg.mul(a[i + k + half], w[k]);
        a[i + k] = mg.add(u, v);
        a[i + k + half] = mg.sub(u, v);
      }
    }
  }
  if (inverse) {
    const std::uint64_t inv_n = mg.to(mod_pow(n % p, p - 2, p));
    for (auto& x : a) x = mg.mul(x, inv_n);
  }
}

// Cyclic-free convolution modulo kPrimes[idx], first out_len coefficients.
inline std::vector<std::uint64_t> convolve_mod(std::span<const u128> a, std::span<const u128> b,
                                               std::size_t out_len, std::size_t idx) {
  const ntt_prime np = kPrimes[idx];
  const montgomery mg(np.modulus);
  const std::size_t need = std::min(out_len, a.size() + b.size() - 1);
  const std::size_t len = std::bit_ceil(std::max<std::size_t>(a.size() + b.size() - 1, 2));
  auto load = [&](std::span<const u128> src) {
    std::vector<std::uint64_t> v(len, 0);
    for (std::size_t i = 0; i < src.size(); ++i)
      v[i] = mg.to(static_cast<std::uint64_t>(src[i] % np.modulus));
    transform(v, mg, np.generator, false);
    return v;
  };
  const bool square = a.data() == b.data() && a.size() == b.size();
  std::vector<std::uint64_t> fa = load(a);
  if (square) {
    for (auto& x : fa) x = mg.mul(x, x);
  } else {
    const std::vector<std::uint64_t> fb = load(b);
    for (std::size_t i = 0; i < len; ++i) fa[i] = mg.mul(fa[i], fb[i]);
  }
  transform(fa, mg, np.generator, true);
  fa.resize(need);
  for (auto& x : fa) x = mg.from(x);
  fa.resize(out_len, 0);
  return fa;
}

/// Number of transform primes whose product exceeds `log2_bound` bits.
inline std::size_t primes_needed(double log2_bound) {
  double bits = 0;
  for (std::size_t k = 0; k < kPrimes.size(); ++k) {
    bits += std::log2(static_cast<double>(kPrimes[k].modulus));
    if (bits > log2_bound + 1.0) return k + 1;
  }
  throw resource_limit_error("convolution bound exceeds the capacity of the transform primes");
}

/// Exact product coefficients 0..out_len-1 of a and b, each of which must
/// fit in 128 bits; coefficient values are bounded by 2^log2_bound.
inline std::vector<u128> convolve_exact(std::span<const u128> a, std::span<const u128> b,
                                        std::size_t out_len, double log2_bound) {
  if (a.empty() || b.empty()) return std::vector<u128>(out_len, 0);
  const std::size_t full = a.size() + b.size() - 1;
  if (std::bit_width(std::bit_ceil(full)) - 1 > kMaxLog2Length)
    throw resource_limit_error("convolution length exceeds transform capacity");
  const std::size_t k = primes_needed(std::max(log2_bound, 1.0));

  std::vector<std::vector<std::uint64_t>> residues(k);
  if (k == 1 || full < (std::size_t{1} << 16)) {
    for (std::size_t i = 0; i < k; ++i) residues[i] = convolve_mod(a, b, out_len, i);
  } else {
    std::vector<std::jthread> workers;
    for (std::size_t i = 0; i < k; ++i)
      workers.emplace_back([&, i] { residues[i] = convolve_mod(a, b, out_len, i); });
  }

  // Garner: x = v0 + v1*p0 + v2*p0*p1 + ...
  std::array<std::array<std::uint64_t, 5>, 5> prefix_mod{};  // prod_{j<i} p_j mod p_t
  std::array<std::uint64_t, 5> inv_prefix{};
  for (std::size_t t = 0; t < k; ++t) {
    const std::uint64_t pt = kPrimes[t].modulus;
    u128 acc = 1;
    for (std::size_t i = 0; i <= t; ++i) {
      prefix_mod[t][i] = static_cast<std::uint64_t>(acc);
      acc = acc * (kPrimes[i].modulus % pt) % pt;
    }
    inv_prefix[t] = mod_pow(prefix_mod[t][t], pt - 2, pt);
  }
  std::array<u128, 5> radix{};  // prod_{j<i} p_j, 0 once it overflows
  std::array<bool, 5> radix_fits{};
  {
    u128 acc = 1;
    bool fits = true;
    for (std::size_t i = 0; i < k; ++i) {
      radix[i] = acc;
      radix_fits[i] = fits;
      if (fits && __builtin_mul_overflow(acc, u128{kPrimes[i].modulus}, &acc)) fits = false;
    }
  }

  std::vector<u128> out(out_len);
  std::array<std::uint64_t, 5> digit{};
  for (std::size_t n = 0; n < out_len; ++n) {
    for (std::size_t t = 0; t < k; ++t) {
      const std::uint64_t pt = kPrimes[t].modulus;
      u128 partial = 0;
      for (std::size_t i = 0; i < t; ++i) partial = (partial + static_cast<u128>(digit[i]) * prefix_mod[t][i]) % pt;
      const std::uint64_t diff = static_cast<std::uint64_t>((residues[t][n] + pt - partial) % pt);
      digit[t] = static_cast<std::uint64_t>(static_cast<u128>(diff) * inv_prefix[t] % pt);
    }
    u128 value = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (digit[i] == 0) continue;
      u128 term;
      if (!radix_fits[i] || __builtin_mul_overflow(radix[i], u128{digit[i]}, &term) ||
          __builtin_add_overflow(value, term, &value))
        throw coefficient_overflow("series product coefficient exceeds 128 bits");
    }
    out[n] = value;
  }
  return out;
}

}  // namespace pp::ntt
