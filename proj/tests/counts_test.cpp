#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "pp/counts.hpp"

namespace {

using pp::CountTable;
using pp::u128;

const pp::PrimeTable& table() {
  static const pp::PrimeTable t = pp::sieve_upto(2'000'000);
  return t;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("pp_counts_test_" + name);
}

}  // namespace

TEST(Q2Table, SmallValues) {
  const auto q = pp::q2_table(table(), 10);
  EXPECT_EQ(q.m(), 2u);
  EXPECT_EQ(q.n(), 20u);
  EXPECT_EQ(q.source(), pp::provenance::convolution);
  EXPECT_EQ(q.q(4), 0u);
  EXPECT_EQ(q.q(6), 1u);
  EXPECT_EQ(q.q(7), 0u);
  EXPECT_EQ(q.q(8), 1u);
  EXPECT_EQ(q.q(10), 2u);
  EXPECT_THROW(pp::q2_table(table(), 0), std::invalid_argument);
  EXPECT_THROW(pp::q2_table(table(), 1'000'001), std::out_of_range);
}

TEST(Q2Naive, SmallValues) {
  EXPECT_EQ(pp::q2_naive(table(), 4), 0u);
  EXPECT_EQ(pp::q2_naive(table(), 6), 1u);
  EXPECT_EQ(pp::q2_naive(table(), 10), 2u);
  EXPECT_EQ(pp::q2_naive(table(), 11), 0u);
}

TEST(Q2Table, MatchesNaiveExhaustivelyTo2000) {
  const auto q = pp::q2_table(table(), 1000);
  for (std::uint64_t s = 0; s <= 2000; ++s) ASSERT_EQ(q.q(s), pp::q2_naive(table(), s)) << s;
}

TEST(Q2Table, MatchesNaiveAtRandomPointsTo2e6) {
  const auto q = pp::q2_table(table(), 1'000'000);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::uint64_t> half(1001, 1'000'000);
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t s = 2 * half(rng);
    ASSERT_EQ(q.q(s), pp::q2_naive(table(), s)) << s;
  }
  EXPECT_EQ(q.prefix(2'000'000), u128{5987208284});
}

TEST(QmTable, SmallValuesAllPaths) {
  for (const CountTable& t : {pp::qm_table_dp(table(), 3, 30), pp::qm_table_bell(table(), 3, 30),
                              pp::qm_table_naive(table(), 3, 30)}) {
    EXPECT_EQ(t.q(9), 1u);
    EXPECT_EQ(t.q(10), 0u);
    EXPECT_EQ(t.q(11), 1u);
    EXPECT_EQ(t.prefix(11), 2u);
  }
  EXPECT_EQ(pp::qm_table_dp(table(), 4, 12).q(12), 1u);
  EXPECT_EQ(pp::qm_table_bell(table(), 4, 12).q(12), 1u);
}

TEST(QmTable, OnePartIsPrimality) {
  const auto t = pp::qm_table_bell(table(), 1, 1000);
  for (std::uint64_t k = 0; k <= 1000; ++k)
    ASSERT_EQ(t.q(k), (k % 2 == 1 && table().is_prime(k)) ? 1u : 0u) << k;
  EXPECT_EQ(pp::qm_table_dp(table(), 1, 1000), CountTable(1, 1000, std::vector<u128>(t.values().begin(), t.values().end()), pp::provenance::dp));
}

TEST(QmTable, TwoPartBellMatchesConvolution) {
  const auto bell = pp::qm_table_bell(table(), 2, 4000);
  const auto conv = pp::q2_table(table(), 2000);
  for (std::uint64_t k = 0; k <= 4000; ++k) ASSERT_EQ(bell.q(k), conv.q(k)) << k;
}

TEST(QmTable, BellEqualsDpTo3000) {
  for (unsigned m = 2; m <= 5; ++m) {
    const auto bell = pp::qm_table_bell(table(), m, 3000);
    const auto dp = pp::qm_table_dp(table(), m, 3000);
    for (std::uint64_t k = 0; k <= 3000; ++k) ASSERT_EQ(bell.q(k), dp.q(k)) << "m=" << m << " k=" << k;
  }
}

TEST(QmTable, DpEqualsBruteForceTo200) {
  for (unsigned m = 1; m <= 5; ++m) {
    const auto dp = pp::qm_table_dp(table(), m, 200);
    const auto naive = pp::qm_table_naive(table(), m, 200);
    for (std::uint64_t k = 0; k <= 200; ++k) ASSERT_EQ(dp.q(k), naive.q(k)) << "m=" << m << " k=" << k;
  }
}

TEST(QmTable, ParityAndLowerBound) {
  for (unsigned m = 2; m <= 6; ++m) {
    const auto t = pp::qm_table_dp(table(), m, 500);
    for (std::uint64_t k = 0; k <= 500; ++k)
      if (k < 3 * m || k % 2 != m % 2) {
        ASSERT_EQ(t.q(k), 0u) << "m=" << m << " k=" << k;
      }
  }
}

TEST(QmTable, Preconditions) {
  EXPECT_THROW(pp::qm_table_dp(table(), 0, 10), std::invalid_argument);
  EXPECT_THROW(pp::qm_table_dp(table(), 9, 10), std::invalid_argument);
  EXPECT_THROW(pp::qm_table_dp(table(), 3, 100'000, 1e6), pp::resource_limit_error);
  EXPECT_THROW(pp::qm_table_naive(table(), 5, 100'000, 1e6), pp::resource_limit_error);
  EXPECT_THROW(pp::qm_table_bell(table(), 3, 0), std::invalid_argument);
}

TEST(CountTable, InvariantsEnforced) {
  EXPECT_THROW(CountTable(2, 10, std::vector<u128>(10), pp::provenance::naive), std::invalid_argument);
  std::vector<u128> q(11, 0);
  q[4] = 1;  // below 3m
  EXPECT_THROW(CountTable(2, 10, q, pp::provenance::naive), pp::consistency_error);
  q[4] = 0;
  q[9] = 1;  // wrong parity
  EXPECT_THROW(CountTable(2, 10, q, pp::provenance::naive), pp::consistency_error);
}

TEST(Summatory, SmallValues) {
  const auto q = pp::q2_table(table(), 10);
  EXPECT_EQ(pp::summatory(q, 4), 0u);
  EXPECT_EQ(pp::summatory(q, 6), 1u);
  EXPECT_EQ(pp::summatory(q, 10), 4u);
  EXPECT_THROW(pp::summatory(q, 21), std::out_of_range);
  EXPECT_EQ(pp::summatory(pp::qm_table_dp(table(), 3, 11), 11), 2u);
}

TEST(Summatory, FrozenValues) {
  const auto q2 = pp::q2_table(table(), 100'000);
  EXPECT_EQ(pp::summatory(q2, 20'000), u128{1437830});
  EXPECT_EQ(pp::summatory(q2, 200'000), u128{88689687});
  const auto q3 = pp::qm_table_bell(table(), 3, 100'000);
  EXPECT_EQ(pp::summatory(q3, 1000), u128{197157});
  EXPECT_EQ(pp::summatory(q3, 10'000), u128{70307114});
  EXPECT_EQ(pp::summatory(q3, 100'000), u128{31457927334});
}

TEST(QTotal, SmallValues) {
  const auto q = pp::q_total_table(table(), 100);
  EXPECT_EQ(q[0], 1);
  EXPECT_EQ(q[3], 1);
  EXPECT_EQ(q[4], 0);
  EXPECT_EQ(q[5], 1);
  EXPECT_EQ(q[6], 1);
  EXPECT_EQ(q[8], 1);
  EXPECT_EQ(q[10], 2);  // 3+7, 5+5
  EXPECT_THROW(pp::q_total_table(table(), 300'000), pp::resource_limit_error);
}

TEST(QTotal, SumOfFixedPartCounts) {
  // ways[j][k]: partitions of k into j odd prime parts, for every j <= n/3
  const std::uint64_t n = 200;
  const std::uint64_t max_parts = n / 3;
  std::vector<std::vector<pp::big_int>> ways(max_parts + 1, std::vector<pp::big_int>(n + 1, 0));
  ways[0][0] = 1;
  for (std::uint64_t p : table().odd_primes()) {
    if (p > n) break;
    for (std::uint64_t k = p; k <= n; ++k)
      for (std::uint64_t j = 1; j <= max_parts; ++j) ways[j][k] += ways[j - 1][k - p];
  }
  for (unsigned m = 1; m <= pp::kMaxDpParts; ++m) {
    const auto t = pp::qm_table_dp(table(), m, n);
    for (std::uint64_t k = 0; k <= n; ++k)
      ASSERT_EQ(pp::big_int(static_cast<std::uint64_t>(t.q(k))), ways[m][k]) << "m=" << m << " k=" << k;
  }
  const auto total = pp::q_total_table(table(), n);
  for (std::uint64_t k = 0; k <= n; ++k) {
    pp::big_int sum = 0;
    for (std::uint64_t j = 0; j <= max_parts; ++j) sum += ways[j][k];
    ASSERT_EQ(total[k], sum) << k;
  }
}

TEST(QTotal, ParityMonotoneForLargeK) {
  const auto q = pp::q_total_table(table(), 3000);
  for (std::uint64_t k = 100; k + 2 <= 3000; ++k) ASSERT_LE(q[k], q[k + 2]) << k;
}

TEST(QTotal, MatchesEulerProductMemoOracle) {
  // independent route: Q(n) = (1/n) sum_{k<=n} sigma'(k) Q(n-k), sigma'(k) = sum of odd prime divisors of k
  const std::uint64_t n = 400;
  std::vector<pp::big_int> q(n + 1, 0);
  q[0] = 1;
  std::vector<std::uint64_t> sig(n + 1, 0);
  for (std::uint64_t p : table().odd_primes()) {
    if (p > n) break;
    for (std::uint64_t k = p; k <= n; k += p) sig[k] += p;
  }
  for (std::uint64_t m = 1; m <= n; ++m) {
    pp::big_int acc = 0;
    for (std::uint64_t k = 1; k <= m; ++k) acc += pp::big_int(sig[k]) * q[m - k];
    q[m] = acc / m;
  }
  const auto fast = pp::q_total_table(table(), n);
  for (std::uint64_t k = 0; k <= n; ++k) ASSERT_EQ(fast[k], q[k]) << k;
}

TEST(LogBig, AgreesWithDouble) {
  EXPECT_NEAR(pp::log_big(pp::big_int(1000)), std::log(1000.0), 1e-12);
  const pp::big_int huge = pp::big_int(1) << 500;
  EXPECT_NEAR(pp::log_big(huge), 500 * std::log(2.0), 1e-9);
  EXPECT_THROW(pp::log_big(pp::big_int(0)), pp::undefined_input_error);
}

TEST(CountCache, RoundTripAndStale) {
  const auto path = temp_file("q3.ppc");
  const auto t = pp::qm_table_dp(table(), 3, 2000);
  pp::save_count_cache(t, path);
  const auto back = pp::load_count_cache(path, 3, 2000, pp::provenance::dp);
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(*back, t);
  EXPECT_FALSE(pp::load_count_cache(path, 3, 2001, pp::provenance::dp).has_value());
  EXPECT_FALSE(pp::load_count_cache(path, 4, 2000, pp::provenance::dp).has_value());
  EXPECT_FALSE(pp::load_count_cache(path, 3, 2000, pp::provenance::bell).has_value());
  std::filesystem::resize_file(path, std::filesystem::file_size(path) + 1);
  EXPECT_FALSE(pp::load_count_cache(path, 3, 2000, pp::provenance::dp).has_value());
  std::filesystem::remove(path);
}

TEST(CountCsv, Rows) {
  std::ostringstream os;
  pp::write_csv(os, pp::q2_table(table(), 5));
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, 10), "k,q,prefix");
  EXPECT_NE(s.find("\n10,2,4\n"), std::string::npos);
}
