#pragma once

// The `pp` command line: sieve, count, verify-identity, asym, hl, c2, sample.
//
// Exit codes: 0 success, 1 argument error, 2 verification failure,
// 3 resource limit.

#include <sys/file.h>
#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pp/asymptotics.hpp"
#include "pp/counts.hpp"
#include "pp/primes.hpp"
#include "pp/sampler.hpp"
#include "pp/series.hpp"

namespace pp::cli {

enum exit_code : int { kOk = 0, kUsage = 1, kVerification = 2, kResource = 3 };

inline constexpr std::uint64_t kDefaultSeed = 20240521;

struct RunConfig {
  std::string subcommand;
  std::uint64_t limit = 0;
  unsigned m = 2;
  std::uint64_t degree = 0;
  std::uint64_t seed = kDefaultSeed;
  std::uint64_t trials = 0;
  std::uint64_t prime_limit = 1000000;
  std::string out;
  std::string format = "csv";
  std::string cache_dir;
  int verbosity = 0;

  std::string path;  // count: conv|bell|dp|naive
  std::string check;  // asym
  std::string points;
  std::uint64_t from = 0, to = 0;
  std::string ks;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
};

/// Exclusive flock on DIR/.lock for the lifetime of the object.
class cache_lock {
 public:
  explicit cache_lock(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    fd_ = ::open((dir / ".lock").c_str(), O_RDWR | O_CREAT, 0644);
    if (fd_ >= 0) ::flock(fd_, LOCK_EX);
  }
  ~cache_lock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  cache_lock(const cache_lock&) = delete;
  cache_lock& operator=(const cache_lock&) = delete;

 private:
  int fd_ = -1;
};

inline std::string resolve_cache_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("PP_CACHE_DIR")) return env;
  return {};
}

inline PrimeTable load_or_sieve(std::uint64_t limit, const std::string& cache_dir) {
  limit = std::max<std::uint64_t>(limit, 2);
  if (cache_dir.empty()) return sieve_upto(limit);
  cache_lock lock(cache_dir);
  const auto file = std::filesystem::path(cache_dir) / ("primes-v" + std::to_string(kPrimeCacheVersion) + "-" +
                                                        std::to_string(limit) + ".ppl");
  if (auto cached = load_prime_cache(file, limit)) return std::move(*cached);
  PrimeTable t = sieve_upto(limit);
  save_prime_cache(t, file);
  return t;
}

inline provenance parse_path(const std::string& s, unsigned m) {
  if (s.empty()) return m == 2 ? provenance::convolution : provenance::bell;
  if (s == "conv") return provenance::convolution;
  if (s == "bell") return provenance::bell;
  if (s == "dp") return provenance::dp;
  if (s == "naive") return provenance::naive;
  throw std::invalid_argument("unknown --path " + s);
}

inline CountTable truncate(const CountTable& t, std::uint64_t n) {
  const auto v = t.values();
  return {t.m(), n, std::vector<u128>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n) + 1), t.source()};
}

/// Q_m(k) for k <= n along the requested path.
inline CountTable compute_counts(const PrimeTable& table, unsigned m, std::uint64_t n, provenance path) {
  switch (path) {
    case provenance::convolution:
      if (m != 2) throw std::invalid_argument("--path conv is only available for m = 2");
      return truncate(q2_table(table, (n + 1) / 2), n);
    case provenance::bell: return qm_table_bell(table, m, n);
    case provenance::dp: return qm_table_dp(table, m, n);
    case provenance::naive:
      if (m == 2) {
        std::vector<u128> q(n + 1, 0);
        for (std::uint64_t s = 6; s <= n; s += 2) q[s] = q2_naive(table, s);
        return {2, n, std::move(q), provenance::naive};
      }
      return qm_table_naive(table, m, n);
  }
  throw std::invalid_argument("unknown count path");
}

inline CountTable load_or_count(const PrimeTable& table, unsigned m, std::uint64_t n, provenance path,
                                const std::string& cache_dir) {
  if (cache_dir.empty()) return compute_counts(table, m, n, path);
  cache_lock lock(cache_dir);
  const auto file = std::filesystem::path(cache_dir) /
                    ("counts-v" + std::to_string(kCountCacheVersion) + "-m" + std::to_string(m) + "-n" +
                     std::to_string(n) + "-" + std::string(to_string(path)) + ".ppc");
  if (auto cached = load_count_cache(file, m, n, path)) return std::move(*cached);
  CountTable t = compute_counts(table, m, n, path);
  save_count_cache(t, file);
  return t;
}

inline nlohmann::json u128_json(u128 v) {
  if (v >> 64 == 0) return static_cast<std::uint64_t>(v);
  return to_string(v);
}

/// Writes `body` to --out or stdout.
template <typename Writer>
void emit(const std::string& out, Writer&& body) {
  if (out.empty() || out == "-") {
    body(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream os(out, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open output file " + out);
  body(os);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw std::invalid_argument("--points must list at least one value");
  return out;
}

inline std::uint64_t parse_count(const std::string& s) {
  // accepts 100000 as well as 1e5
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size() || !(v >= 0) || v != std::floor(v) || v > 1.8e19)
    throw std::invalid_argument("not a nonnegative integer: " + s);
  return static_cast<std::uint64_t>(v);
}

inline int cmd_sieve(const RunConfig& c) {
  const PrimeTable t = load_or_sieve(c.limit, resolve_cache_dir(c.cache_dir));
  std::cout << "pi(" << c.limit << ") = " << t.pi(c.limit) << '\n';
  return kOk;
}

inline int cmd_count(const RunConfig& c) {
  const provenance path = parse_path(c.path, c.m);
  const std::string cache = resolve_cache_dir(c.cache_dir);
  const PrimeTable table = load_or_sieve(c.limit, cache);
  const CountTable t = load_or_count(table, c.m, c.limit, path, cache);
  emit(c.out, [&](std::ostream& os) {
    if (c.format == "json") {
      nlohmann::json rows = nlohmann::json::array();
      for (std::uint64_t k = 0; k <= t.n(); ++k)
        rows.push_back({{"k", k}, {"q", u128_json(t.q(k))}, {"prefix", u128_json(t.prefix(k))}});
      os << nlohmann::json{{"m", t.m()}, {"n", t.n()}, {"provenance", to_string(t.source())}, {"rows", rows}}.dump()
         << '\n';
    } else {
      write_csv(os, t);
    }
  });
  return kOk;
}

inline int cmd_verify(const RunConfig& c) {
  const PrimeTable table = sieve_upto(std::max<std::uint64_t>(c.degree, 2));
  if (c.m == 2) {
    std::vector<u128> q(c.degree + 1, 0);
    for (std::uint64_t s = 6; s <= c.degree; s += 2) q[s] = q2_naive(table, s);
    const CountTable naive(2, c.degree, std::move(q), provenance::naive);
    const Lemma1Report rep = verify_lemma1(table, c.degree, naive);
    if (rep.ok) {
      std::cout << "lemma1: OK up to " << c.degree << '\n';
      return kOk;
    }
    std::cout << "lemma1: MISMATCH at k=" << *rep.first_mismatch << " (series " << to_string(rep.series_value)
              << ", 2*Q_2 " << to_string(rep.doubled_count) << ")\n";
    return kVerification;
  }
  const CountTable bell = qm_table_bell(table, c.m, c.degree);
  const CountTable dp = qm_table_dp(table, c.m, c.degree);
  for (std::uint64_t k = 0; k <= c.degree; ++k) {
    if (bell.q(k) != dp.q(k)) {
      std::cout << "bell-vs-dp m=" << c.m << ": MISMATCH at k=" << k << " (bell " << to_string(bell.q(k))
                << ", dp " << to_string(dp.q(k)) << ")\n";
      return kVerification;
    }
  }
  std::cout << "bell-vs-dp m=" << c.m << ": OK up to " << c.degree << '\n';
  return kOk;
}

inline void emit_report(const RunConfig& c, const AsymptoticReport& rep) {
  emit(c.out, [&](std::ostream& os) {
    if (c.format == "json")
      os << to_json(rep).dump() << '\n';
    else
      write_csv(os, rep);
  });
}

inline int cmd_asym(const RunConfig& c) {
  const auto items = split_list(c.points);
  AsymptoticReport rep;
  rep.theorem = c.check;
  rep.params = {{"points", items}};
  const std::string cache = resolve_cache_dir(c.cache_dir);

  if (c.check == "lemma2") {
    std::vector<double> ts;
    for (const auto& s : items) {
      ts.push_back(std::stod(s));
      if (!(ts.back() > 0 && ts.back() < std::exp(-1.0)))
        throw std::invalid_argument("lemma2 points must lie in (0, 1/e): " + s);
    }
    const double smallest = *std::min_element(ts.begin(), ts.end());
    const PrimeTable table = load_or_sieve(lemma2_cutoff(smallest), cache);
    for (double t : ts) {
      const double value = odd_prime_exponential_sum(table, t, lemma2_cutoff(t));
      rep.add_row(t, value, 1.0 / (t * std::log(1.0 / t)));
    }
    emit_report(c, rep);
    return kOk;
  }

  std::vector<std::uint64_t> ns;
  for (const auto& s : items) ns.push_back(parse_count(s));
  const std::uint64_t top = *std::max_element(ns.begin(), ns.end());

  if (c.check == "theorem1") {
    const PrimeTable table = load_or_sieve(2 * top, cache);
    const CountTable q2 = load_or_count(table, 2, 2 * top, provenance::convolution, cache);
    for (auto n : ns) rep.add_row(static_cast<double>(n), to_double(summatory(q2, 2 * n)), theorem1_predicted(n));
  } else if (c.check == "theorem3") {
    rep.params["m"] = c.m;
    if (c.m < 3) throw std::invalid_argument("theorem3 needs --m 3 or larger");
    const PrimeTable table = load_or_sieve(top, cache);
    const CountTable qm = load_or_count(table, c.m, top, provenance::bell, cache);
    const AsymptoticLaw law = tauberian_law(c.m);
    for (auto n : ns)
      rep.add_row(static_cast<double>(n), to_double(summatory(qm, n)),
                  law.predicted_partial_sum(static_cast<double>(n)));
  } else if (c.check == "hardy-ramanujan") {
    const PrimeTable table = load_or_sieve(top, cache);
    const auto q = q_total_table(table, top);
    for (auto n : ns) rep.add_row(static_cast<double>(n), log_big(q[n]), hardy_ramanujan_denominator(n));
  } else {
    throw std::invalid_argument("unknown --check " + c.check);
  }
  emit_report(c, rep);
  return kOk;
}

inline int cmd_hl(const RunConfig& c) {
  if (c.from > c.to) throw std::invalid_argument("--from must not exceed --to");
  const std::uint64_t first = std::max<std::uint64_t>(6, c.from + (c.from % 2));
  const PrimeTable table = load_or_sieve(std::max(c.to, c.prime_limit), resolve_cache_dir(c.cache_dir));
  const double c2 = twin_prime_constant(table, c.prime_limit).value;
  const CountTable q2 = q2_table(table, (c.to + 1) / 2);
  AsymptoticReport rep;
  rep.theorem = "hardy-littlewood";
  rep.params = {{"from", c.from}, {"to", c.to}, {"c2", c2}, {"c2_prime_limit", c.prime_limit}};
  std::vector<double> integral_ratio, crude_ratio;
  for (std::uint64_t n = first; n <= c.to; n += 2) {
    const HlPrediction h = hl_prediction(table, n, c2);
    const double q = to_double(q2.q(n));
    rep.add_row(static_cast<double>(n), q, h.predicted);
    integral_ratio.push_back(q / h.predicted);
    crude_ratio.push_back(q / h.crude_predicted);
  }
  emit_report(c, rep);
  auto median = [](std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
  };
  std::cerr << "hl: median ratio " << median(integral_ratio) << " (integral form), " << median(crude_ratio)
            << " (n/log^2 n form)\n";
  return kOk;
}

inline int cmd_c2(const RunConfig& c) {
  const PrimeTable table = load_or_sieve(c.prime_limit, resolve_cache_dir(c.cache_dir));
  const TwinPrimeConstant v = twin_prime_constant(table, c.prime_limit);
  char buf[128];
  std::snprintf(buf, sizeof buf, "C2(%llu) = %.12f tail_bound = %.3e\n",
                static_cast<unsigned long long>(c.prime_limit), v.value, v.tail_bound);
  std::cout << buf;
  return kOk;
}

inline int cmd_sample(const RunConfig& c) {
  if (c.trials == 0) throw std::invalid_argument("--trials must be positive");
  const std::string cache = resolve_cache_dir(c.cache_dir);
  const bool goldbach = c.m == 2;
  const std::uint64_t range = goldbach ? 2 * c.limit : c.limit;
  const PrimeTable table = load_or_sieve(range, cache);
  const CountTable counts =
      load_or_count(table, c.m, range, goldbach ? provenance::convolution : provenance::bell, cache);
  rng_stream rng(c.seed);
  std::vector<PartitionSample> samples;
  if (goldbach) {
    auto unrank = [&](u128 j) { return unrank_goldbach(counts, table, j); };
    samples = sample_many(unrank, counts.prefix(range), rng, c.trials, c.threads);
  } else {
    const MultisetSampler sampler(counts, table);
    auto unrank = [&](u128 j) { return sampler.unrank(j); };
    samples = sample_many(unrank, sampler.total(), rng, c.trials, c.threads);
  }

  if (!c.out.empty() || c.ks.empty())
    emit(c.out, [&](std::ostream& os) { write_csv(os, samples, c.m); });

  if (c.ks.empty()) return kOk;
  KsReport rep;
  if (c.ks == "limit")
    rep = ks_statistic(samples, range, LimitCdf{c.m});
  else if (c.ks == "exact")
    rep = ks_statistic(samples, range, ExactSizeCdf{&counts});
  else
    throw std::invalid_argument("--ks must be limit or exact");
  std::cout << to_json(rep).dump() << '\n';
  return rep.passed() ? kOk : kVerification;
}

inline int run(int argc, char** argv) {
  CLI::App app{"Exact counts, identities, asymptotics and sampling for partitions into odd primes", "pp"};
  app.require_subcommand(1);
  RunConfig c;
  app.add_flag("-v,--verbose", c.verbosity, "More diagnostics on stderr");

  auto* sieve = app.add_subcommand("sieve", "Sieve primes up to --limit");
  sieve->add_option("--limit", c.limit, "Upper limit N")->required()->check(CLI::Range(2ULL, 1ULL << 33));
  sieve->add_option("--cache", c.cache_dir, "Cache directory (default $PP_CACHE_DIR)");

  auto* count = app.add_subcommand("count", "Tabulate Q_m(k) and prefix sums for k <= --limit");
  count->add_option("--m", c.m, "Number of parts")->required()->check(CLI::Range(1u, 8u));
  count->add_option("--limit", c.limit, "Largest size k")->required()->check(CLI::Range(1ULL, 1ULL << 33));
  count->add_option("--path", c.path, "conv|bell|dp|naive")->check(CLI::IsMember({"conv", "bell", "dp", "naive"}));
  count->add_option("--out", c.out, "Output file (default stdout)");
  count->add_option("--format", c.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  count->add_option("--cache", c.cache_dir, "Cache directory (default $PP_CACHE_DIR)");

  auto* verify = app.add_subcommand("verify-identity", "Check the generating-function identity coefficientwise");
  verify->add_option("--m", c.m, "Number of parts")->required()->check(CLI::Range(1u, 8u));
  verify->add_option("--degree", c.degree, "Degree bound D")->required()->check(CLI::Range(1ULL, 1ULL << 30));

  auto* asym = app.add_subcommand("asym", "Asymptotic ratio reports");
  asym->add_option("--check", c.check, "theorem1|theorem3|lemma2|hardy-ramanujan")
      ->required()
      ->check(CLI::IsMember({"theorem1", "theorem3", "lemma2", "hardy-ramanujan"}));
  asym->add_option("--points", c.points, "Comma-separated scales (n, or t for lemma2)")->required();
  asym->add_option("--m", c.m, "Number of parts for theorem3")->check(CLI::Range(2u, 8u));
  asym->add_option("--out", c.out, "Output file (default stdout)");
  asym->add_option("--format", c.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  asym->add_option("--cache", c.cache_dir, "Cache directory (default $PP_CACHE_DIR)");

  auto* hl = app.add_subcommand("hl", "Hardy-Littlewood prediction against Q_2 over even n in [A, B]");
  hl->add_option("--from", c.from, "A")->required();
  hl->add_option("--to", c.to, "B")->required()->check(CLI::Range(6ULL, 1ULL << 32));
  hl->add_option("--c2-prime-limit", c.prime_limit, "Prime limit for the C_2 product")
      ->check(CLI::Range(1000ULL, 1ULL << 33));
  hl->add_option("--out", c.out, "Output file (default stdout)");
  hl->add_option("--format", c.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  hl->add_option("--cache", c.cache_dir, "Cache directory (default $PP_CACHE_DIR)");

  auto* c2 = app.add_subcommand("c2", "Partial product for the twin prime constant");
  c2->add_option("--prime-limit", c.prime_limit, "P")->required()->check(CLI::Range(1000ULL, 1ULL << 33));
  c2->add_option("--cache", c.cache_dir, "Cache directory (default $PP_CACHE_DIR)");

  auto* sample = app.add_subcommand("sample", "Uniform samples from Sigma_{2n} (m = 2) or Sigma_{m,n}");
  sample->add_option("--m", c.m, "Number of parts")->required()->check(CLI::Range(2u, 6u));
  sample->add_option("--n", c.limit, "n (sizes up to 2n for m = 2, up to n otherwise)")
      ->required()
      ->check(CLI::Range(3ULL, 1ULL << 32));
  sample->add_option("--trials", c.trials, "Number of samples T")->required()->check(CLI::Range(1ULL, 100000000ULL));
  sample->add_option("--seed", c.seed, "Random seed")->required();
  sample->add_option("--out", c.out, "Sample CSV file");
  sample->add_option("--ks", c.ks, "limit|exact")->check(CLI::IsMember({"limit", "exact"}));
  sample->add_option("--threads", c.threads, "Unranking threads (output is independent of this)")
      ->check(CLI::Range(1u, 256u));
  sample->add_option("--cache", c.cache_dir, "Cache directory (default $PP_CACHE_DIR)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*sieve) return cmd_sieve(c);
    if (*count) return cmd_count(c);
    if (*verify) return cmd_verify(c);
    if (*asym) return cmd_asym(c);
    if (*hl) return cmd_hl(c);
    if (*c2) return cmd_c2(c);
    if (*sample) return cmd_sample(c);
  } catch (const resource_limit_error& e) {
    std::cerr << "pp: resource limit: " << e.what() << '\n';
    return kResource;
  } catch (const coefficient_overflow& e) {
    std::cerr << "pp: overflow: " << e.what() << '\n';
    return kResource;
  } catch (const consistency_error& e) {
    std::cerr << "pp: verification failure: " << e.what() << '\n';
    return kVerification;
  } catch (const std::exception& e) {
    std::cerr << "pp: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace pp::cli
