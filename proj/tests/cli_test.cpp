#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the pp binary; stderr is discarded.
Result run(const std::string& args) {
  const std::string cmd = std::string(PP_CLI_PATH) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::filesystem::path scratch() {
  auto dir = std::filesystem::temp_directory_path() / "pp_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Cli, VerifyIdentityLemma1) {
  const auto r = run("verify-identity --m 2 --degree 20000");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "lemma1: OK up to 20000\n");
}

TEST(Cli, VerifyIdentityBellVsDp) {
  const auto r = run("verify-identity --m 4 --degree 800");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("OK up to 800"), std::string::npos);
}

TEST(Cli, CountCsvRow) {
  const auto r = run("count --m 2 --limit 100 --format csv");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, 11), "k,q,prefix\n");
  EXPECT_NE(r.out.find("\n10,2,"), std::string::npos);
}

TEST(Cli, CountPathsAgree) {
  const std::string conv = run("count --m 2 --limit 300 --path conv").out;
  EXPECT_EQ(run("count --m 2 --limit 300 --path bell").out, conv);
  EXPECT_EQ(run("count --m 2 --limit 300 --path dp").out, conv);
  EXPECT_EQ(run("count --m 2 --limit 300 --path naive").out, conv);
  const std::string bell3 = run("count --m 3 --limit 150 --path bell").out;
  EXPECT_EQ(run("count --m 3 --limit 150 --path naive").out, bell3);
}

TEST(Cli, CountJson) {
  const auto r = run("count --m 3 --limit 20 --format json");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["m"], 3);
  EXPECT_EQ(j["rows"][11]["q"], 1);
  EXPECT_EQ(j["rows"][11]["prefix"], 2);
}

TEST(Cli, CountOutFileAndCache) {
  const auto dir = scratch();
  const auto cache = dir / "cache";
  std::filesystem::remove_all(cache);
  const auto out = dir / "q3.csv";
  ASSERT_EQ(run("count --m 3 --limit 500 --out " + out.string() + " --cache " + cache.string()).code, 0);
  const std::string first = slurp(out);
  EXPECT_TRUE(std::filesystem::exists(cache / "counts-v1-m3-n500-bell.ppc"));
  EXPECT_TRUE(std::filesystem::exists(cache / "primes-v1-500.ppl"));
  ASSERT_EQ(run("count --m 3 --limit 500 --out " + out.string() + " --cache " + cache.string()).code, 0);
  EXPECT_EQ(slurp(out), first);
  // a corrupted cache entry is ignored and rebuilt
  std::filesystem::resize_file(cache / "counts-v1-m3-n500-bell.ppc", 40);
  ASSERT_EQ(run("count --m 3 --limit 500 --out " + out.string() + " --cache " + cache.string()).code, 0);
  EXPECT_EQ(slurp(out), first);
}

TEST(Cli, C2) {
  const auto r = run("c2 --prime-limit 1000");
  ASSERT_EQ(r.code, 0);
  const auto eq = r.out.find("= ");
  ASSERT_NE(eq, std::string::npos);
  EXPECT_GT(std::stod(r.out.substr(eq + 2)), 0.6601618158);
}

TEST(Cli, Sieve) {
  const auto r = run("sieve --limit 1000000");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "pi(1000000) = 78498\n");
}

TEST(Cli, AsymReports) {
  const auto t1 = run("asym --check theorem1 --points 10000,100000");
  ASSERT_EQ(t1.code, 0);
  EXPECT_EQ(t1.out.substr(0, 31), "scale,computed,predicted,ratio\n");
  EXPECT_NE(t1.out.find("10000,1437830,"), std::string::npos);
  EXPECT_EQ(run("asym --check theorem3 --m 3 --points 1000,10000").code, 0);
  EXPECT_EQ(run("asym --check lemma2 --points 0.01,0.001").code, 0);
  EXPECT_EQ(run("asym --check hardy-ramanujan --points 1000,1001").code, 0);
}

TEST(Cli, HlReport) {
  const auto dir = scratch();
  const auto out = dir / "hl.csv";
  ASSERT_EQ(run("hl --from 1000 --to 1100 --c2-prime-limit 100000 --out " + out.string()).code, 0);
  const std::string csv = slurp(out);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 51);
}

TEST(Cli, SampleWithKs) {
  const auto dir = scratch();
  const auto out = dir / "s.csv";
  const auto r = run("sample --m 2 --n 10000 --trials 5000 --seed 7 --ks exact --out " + out.string());
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["T"], 5000);
  EXPECT_LE(j["D"].get<double>(), j["threshold"].get<double>());
  EXPECT_EQ(slurp(out).substr(0, 19), "size,part_1,part_2\n");
}

TEST(Cli, SampleDeterministic) {
  const auto dir = scratch();
  const auto a = dir / "a.csv", b = dir / "b.csv";
  ASSERT_EQ(run("sample --m 3 --n 2000 --trials 3000 --seed 99 --out " + a.string()).code, 0);
  ASSERT_EQ(run("sample --m 3 --n 2000 --trials 3000 --seed 99 --threads 3 --out " + b.string()).code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_FALSE(slurp(a).empty());
}

TEST(Cli, KsFailureIsVerificationExit) {
  // n = 20: the exact law is far from u^2, 10^5 samples must reject it
  EXPECT_EQ(run("sample --m 2 --n 20 --trials 100000 --seed 1 --ks limit").code, 2);
}

TEST(Cli, ArgumentErrors) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("count --m 2").code, 1);
  EXPECT_EQ(run("count --m 2 --limit 10 --path fft").code, 1);
  EXPECT_EQ(run("count --m 3 --limit 10 --path conv").code, 1);
  EXPECT_EQ(run("asym --check theorem9 --points 1").code, 1);
  EXPECT_EQ(run("asym --check lemma2 --points 0.5").code, 1);
  EXPECT_EQ(run("c2 --prime-limit 10").code, 1);
  EXPECT_EQ(run("sieve --limit 1").code, 1);
}

TEST(Cli, ResourceLimitExit) {
  EXPECT_EQ(run("count --m 6 --limit 20000 --path naive").code, 3);
  EXPECT_EQ(run("count --m 8 --limit 4000000 --path dp").code, 3);
}
