#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pp/error.hpp"
#include "pp/uint128.hpp"

namespace pp {

/// Which computation produced a CountTable.
enum class provenance : std::uint32_t { convolution = 0, bell = 1, dp = 2, naive = 3 };

inline std::string_view to_string(provenance p) {
  switch (p) {
    case provenance::convolution: return "convolution";
    case provenance::bell: return "bell";
    case provenance::dp: return "dp";
    case provenance::naive: return "naive";
  }
  return "unknown";
}

/// Exact Q_m(k) for 0 <= k <= n together with prefix sums.
class CountTable {
 public:
  CountTable(unsigned m, std::uint64_t n, std::vector<u128> q, provenance prov)
      : m_(m), n_(n), q_(std::move(q)), prov_(prov) {
    if (m_ == 0) throw std::invalid_argument("CountTable: part count must be positive");
    if (q_.size() != n_ + 1) throw std::invalid_argument("CountTable: value array must have n+1 entries");
    prefix_.resize(q_.size());
    u128 running = 0;
    for (std::uint64_t k = 0; k <= n_; ++k) {
      if (q_[k] != 0) {
        if (k < 3ULL * m_)
          throw consistency_error("CountTable: nonzero Q_" + std::to_string(m_) + "(" + std::to_string(k) +
                                  ") below the smallest representable size");
        if ((k % 2) != (m_ % 2))
          throw consistency_error("CountTable: nonzero Q_" + std::to_string(m_) + "(" + std::to_string(k) +
                                  ") violates parity");
      }
      running = checked_add(running, q_[k], "prefix sum");
      prefix_[k] = running;
    }
  }

  unsigned m() const noexcept { return m_; }
  std::uint64_t n() const noexcept { return n_; }
  provenance source() const noexcept { return prov_; }

  u128 q(std::uint64_t k) const {
    if (k > n_) throw std::out_of_range("CountTable::q: index above range");
    return q_[k];
  }
  u128 prefix(std::uint64_t k) const {
    if (k > n_) throw std::out_of_range("CountTable::prefix: index above range");
    return prefix_[k];
  }
  std::span<const u128> values() const noexcept { return q_; }
  std::span<const u128> prefixes() const noexcept { return prefix_; }

  friend bool operator==(const CountTable& a, const CountTable& b) {
    return a.m_ == b.m_ && a.n_ == b.n_ && a.q_ == b.q_;
  }

 private:
  unsigned m_;
  std::uint64_t n_;
  std::vector<u128> q_;
  std::vector<u128> prefix_;
  provenance prov_;
};

/// prefix[N]: S(N) for m = 2 (pass N = 2n), |Sigma_{m,N}| in general.
inline u128 summatory(const CountTable& t, std::uint64_t n) {
  if (n > t.n()) throw std::out_of_range("summatory: N above table range");
  return t.prefix(n);
}

}  // namespace pp
