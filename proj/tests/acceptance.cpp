// Acceptance checks AC1..AC11. One PASS/FAIL line per criterion; exit code is
// nonzero when any criterion fails.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "riskagg/harness.hpp"
#include "riskagg/riskstats.hpp"

using namespace riskagg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

int failures = 0;

void criterion(const std::string& id, const std::string& title, double limit_seconds,
               const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (o.pass && limit_seconds > 0 && secs > limit_seconds) {
    o.pass = false;
    o.detail = "exceeded the " + std::to_string(static_cast<int>(limit_seconds)) + " s budget";
  }
  char t[32];
  std::snprintf(t, sizeof t, "%.2fs", secs);
  std::cout << (o.pass ? "PASS " : "FAIL ") << id << " " << title << " (" << t << ")";
  if (!o.pass) {
    std::cout << ": " << o.detail;
    ++failures;
  }
  std::cout << std::endl;
}

// ---------------------------------------------------------------------------
// Oracles

BigInt raw_sum(const std::vector<PartyInput>& in) {
  BigInt s = 0;
  for (const auto& x : in) s += BigInt(std::get<Fixed>(x).raw());
  return s;
}

std::int64_t dot(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// sum x_i y_i scaled by 2^128, exact.
BigInt raw_dot(const std::vector<Fixed>& a, const std::vector<Fixed>& b) {
  BigInt s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += BigInt(a[i].raw()) * BigInt(b[i].raw());
  return s;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<std::int64_t> codes(RandomSource& rng, std::size_t n, std::uint64_t q) {
  std::vector<std::int64_t> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(static_cast<std::int64_t>(uniform_below(rng, q)));
  return v;
}

Fixed unit_real(RandomSource& rng) {
  return Fixed::from_raw(uniform_below(rng, (u128{1} << 64) + 1));
}

std::uint64_t below(RandomSource& rng, std::uint64_t bound) { return uniform_below(rng, bound); }

// ---------------------------------------------------------------------------
// Process mesh over loopback

std::uint16_t free_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in a{};
  a.sin_family = AF_INET;
  a.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&a), sizeof a);
  socklen_t len = sizeof a;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&a), &len);
  ::close(fd);
  return ntohs(a.sin_port);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("riskagg-acceptance-" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------------------

Outcome ac1() {
  Outcome o;
  const auto dec = [](const char* s) { return mod_real_decimal(s, 3); };
  const std::map<PartyId, std::map<PartyId, ModReal>> masks{{1, {{2, dec("1.4")}, {3, dec("2.1")}}},
                                                            {2, {{1, dec("1.1")}, {3, dec("2.3")}}},
                                                            {3, {{1, dec("0.3")}, {2, dec("2.9")}}}};
  LocalRunOptions opts;
  opts.customize = [&](PartyState& p) { dynamic_cast<SecureSumParty&>(p).pin_masks(masks.at(p.id())); };
  SessionConfig c;
  c.parties = 3;
  c.seed = 1;
  const std::vector<PartyInput> x{Fixed::from_decimal("0.1"), Fixed::from_decimal("0.2"),
                                  Fixed::from_decimal("0.3")};
  const auto r = run_local(c, x, opts);
  const std::vector<ModReal> want{dec("0.1") + dec("1.1") + dec("0.3") - dec("1.4") - dec("2.1"),
                                  dec("0.2") + dec("1.4") + dec("2.9") - dec("1.1") - dec("2.3"),
                                  dec("0.3") + dec("2.1") + dec("2.3") - dec("0.3") - dec("2.9")};
  const char* decimal[] = {"1.0", "1.1", "1.5"};
  for (PartyId i = 1; i <= 3; ++i) {
    const auto* e = r.transcript.views.at(i).find("S[" + std::to_string(i) + "]");
    o.check(e != nullptr, "missing S value");
    if (e == nullptr) return o;
    ByteReader in(e->value);
    const ModReal s = in.mod_real(3);
    o.check(s == want[i - 1], "S" + std::to_string(i) + " differs from exact mod-3 arithmetic");
    const i128 ulps = static_cast<i128>(s.raw()) - static_cast<i128>(dec(decimal[i - 1]).raw());
    o.check(ulps >= -3 && ulps <= 3, "S" + std::to_string(i) + " not within 3 ulps of " + decimal[i - 1]);
  }
  o.check(std::get<Fixed>(r.result.value) == Fixed::from_decimal("0.6"), "output is not 0.6");
  o.check(r.result.to_string() == "0.6", "output renders as " + r.result.to_string());
  return o;
}

Outcome ac2() {
  Outcome o;
  auto rng = ChaChaStream::derive(0xac2, 0);
  for (std::uint64_t t = 0; t < 1000 && o.pass; ++t) {
    SessionConfig c;
    c.parties = static_cast<std::uint16_t>(3 + below(rng, 48));
    c.seed = t;
    std::vector<PartyInput> x;
    for (std::uint16_t i = 0; i < c.parties; ++i) x.push_back(unit_real(rng));
    const auto r = run_local(c, x);
    o.check(BigInt(std::get<Fixed>(r.result.value).raw()) == raw_sum(x),
            "session " + std::to_string(t) + " with m=" + std::to_string(c.parties) + " differs");
  }
  return o;
}

Outcome ac3() {
  Outcome o;
  auto rng = ChaChaStream::derive(0xac3, 0);
  for (std::uint64_t t = 0; t < 500 && o.pass; ++t) {
    SessionConfig c;
    c.protocol = ProtocolId::sip1;
    c.n = static_cast<std::uint32_t>(1 + below(rng, 10000));
    c.q = 2 + below(rng, 255);
    c.seed = t;
    const auto a = codes(rng, c.n, c.q);
    const auto b = codes(rng, c.n, c.q);
    const auto r = run_local(c, {a, b, std::monostate{}});
    o.check(std::get<std::int64_t>(r.result.value) == dot(a, b),
            "session " + std::to_string(t) + " n=" + std::to_string(c.n) + " q=" + std::to_string(c.q));
  }
  return o;
}

Outcome ac4() {
  Outcome o;
  std::uint64_t seed = 0;
  for (std::int64_t x1 = 0; x1 < 3; ++x1)
    for (std::int64_t x2 = 0; x2 < 3; ++x2)
      for (std::int64_t y1 = 0; y1 < 3; ++y1)
        for (std::int64_t y2 = 0; y2 < 3; ++y2) {
          SessionConfig c;
          c.protocol = ProtocolId::sip3;
          c.parties = 2;
          c.n = 2;
          c.q = 3;
          c.rsa_bits = 512;
          c.seed = ++seed;
          const auto r = run_local(c, {std::vector<std::int64_t>{x1, x2}, std::vector<std::int64_t>{y1, y2}});
          o.check(std::get<std::int64_t>(r.result.value) == x1 * y1 + x2 * y2, "exhaustive pair differs");
        }
  auto rng = ChaChaStream::derive(0xac4, 0);
  for (std::uint64_t t = 0; t < 50 && o.pass; ++t) {
    SessionConfig c;
    c.protocol = ProtocolId::sip3;
    c.parties = 2;
    c.n = static_cast<std::uint32_t>(1 + below(rng, 32));
    c.q = 2 + below(rng, 7);
    c.rsa_bits = 512;
    c.seed = 1000 + t;
    const auto a = codes(rng, c.n, c.q);
    const auto b = codes(rng, c.n, c.q);
    const auto r = run_local(c, {a, b});
    o.check(std::get<std::int64_t>(r.result.value) == dot(a, b), "random session " + std::to_string(t));
  }
  return o;
}

Outcome ac5() {
  Outcome o;
  auto rng = ChaChaStream::derive(0xac5, 0);
  const BigInt tolerance = BigInt(1) << 80;  // 2^-48 at scale 2^128
  for (std::uint64_t t = 0; t < 200 && o.pass; ++t) {
    SessionConfig c;
    c.protocol = ProtocolId::sip2;
    c.n = static_cast<std::uint32_t>(1 + below(rng, 256));
    c.seed = t;
    std::vector<Fixed> a, b;
    for (std::uint32_t i = 0; i < c.n; ++i) {
      a.push_back(unit_real(rng));
      b.push_back(unit_real(rng));
    }
    const auto r = run_local(c, {a, b, std::monostate{}});
    const BigInt got = BigInt(std::get<Fixed>(r.result.value).raw()) << 64;
    const BigInt err = abs(got - raw_dot(a, b));
    o.check(err <= tolerance, "session " + std::to_string(t) + " n=" + std::to_string(c.n));
  }
  return o;
}

Outcome ac6() {
  Outcome o;
  std::mt19937_64 gen(0xac6);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> rho(-0.95, 0.95);
  for (std::uint64_t t = 0; t < 100 && o.pass; ++t) {
    const double r = rho(gen);
    std::vector<double> x, y;
    for (int i = 0; i < 100; ++i) {
      x.push_back(z(gen));
      y.push_back(r * x.back() + std::sqrt(1 - r * r) * z(gen));
    }
    RunSettings run;
    run.seed = t;
    const auto res = secure_correlation(x, y, 65537, CorrelationBackend::sip1, run);
    const double err = std::fabs(res.estimate - pearson(x, y));
    o.check(err <= 1e-3, "pair " + std::to_string(t) + " error " + std::to_string(err));
  }
  return o;
}

Outcome ac7() {
  Outcome o;
  const std::vector<Fixed> x{Fixed::from_decimal("0.1"), Fixed::from_decimal("0.2"), Fixed::from_decimal("0.3")};
  const auto fair = uniformity_report(x, 10000, 0xac7);
  o.check(fair.samples.size() == 10000, "wrong sample count");
  o.check(fair.plane_violations == 0, std::to_string(fair.plane_violations) + " plane violations");
  o.check(fair.tests_run && fair.uniform(), "fair masks rejected as non-uniform");
  const auto biased = uniformity_report(x, 10000, 0xac7, [](const SessionConfig& c, PartyId p) {
    return std::make_unique<BiasedSource>(default_source(c, p));
  });
  o.check(!biased.uniform(), "biased masks not detected");
  return o;
}

Outcome ac8() {
  Outcome o;
  SessionConfig sum;
  sum.parties = 3;
  const auto f = [](const char* s) { return PartyInput{Fixed::from_decimal(s)}; };
  const std::vector<PartyInput> a{f("0.25"), f("0.2"), f("0.3")};
  const std::vector<PartyInput> b{f("0.25"), f("0.45"), f("0.05")};
  const std::vector<PartyInput> other{f("0.25"), f("0.9"), f("0.8")};
  const auto eq = view_independence_test(sum, a, b, 1, 5000, 0xac8);
  o.check(!eq.distinguishable(), "secure sum views differ for equal sums");
  const auto ne = view_independence_test(sum, a, other, 1, 5000, 0xac9);
  o.check(ne.distinguishable(), "positive control not detected for secure sum");

  SessionConfig sip1;
  sip1.protocol = ProtocolId::sip1;
  sip1.n = 3;
  sip1.q = 7;
  using V = std::vector<std::int64_t>;
  const std::vector<PartyInput> p{V{1, 2, 3}, V{3, 0, 1}, std::monostate{}};
  const std::vector<PartyInput> p_same{V{1, 2, 3}, V{0, 0, 2}, std::monostate{}};
  const std::vector<PartyInput> p_diff{V{1, 2, 3}, V{6, 6, 6}, std::monostate{}};
  const auto s_eq = view_independence_test(sip1, p, p_same, 1, 5000, 0xaca);
  o.check(!s_eq.distinguishable(), "sip1 views differ for equal inner products");
  const auto s_ne = view_independence_test(sip1, p, p_diff, 1, 5000, 0xacb);
  o.check(s_ne.distinguishable(), "positive control not detected for sip1");
  return o;
}

Outcome ac9() {
  Outcome o;
  SessionConfig c;
  c.parties = 4;
  c.seed = 9;
  const std::vector<PartyInput> x(4, Fixed::from_decimal("0.5"));
  o.check(run_local(c, x).transcript.rounds() == 2, "secure sum rounds");

  using V = std::vector<std::int64_t>;
  SessionConfig s1;
  s1.protocol = ProtocolId::sip1;
  s1.n = 2;
  s1.q = 5;
  s1.seed = 9;
  o.check(run_local(s1, {V{1, 2}, V{3, 4}, std::monostate{}}).transcript.rounds() == 3, "sip1 rounds");

  SessionConfig s2;
  s2.protocol = ProtocolId::sip2;
  s2.n = 2;
  s2.seed = 9;
  const std::vector<Fixed> h{Fixed::from_decimal("0.5"), Fixed::from_decimal("0.25")};
  o.check(run_local(s2, {h, h, std::monostate{}}).transcript.rounds() == 3, "sip2 rounds");

  SessionConfig s3;
  s3.protocol = ProtocolId::sip3;
  s3.parties = 2;
  s3.n = 2;
  s3.q = 5;
  s3.rsa_bits = 512;
  s3.seed = 9;
  o.check(run_local(s3, {V{1, 2}, V{3, 4}}).transcript.rounds() == 3, "sip3 rounds");
  return o;
}

Outcome ac10() {
  Outcome o;
  SessionConfig c;
  c.parties = 3;
  c.seed = 0xac10;
  const std::vector<PartyInput> x{Fixed::from_decimal("0.1"), Fixed::from_decimal("0.2"),
                                  Fixed::from_decimal("0.3")};
  std::map<PartyId, Endpoint> endpoints;
  for (PartyId i = 1; i <= 3; ++i) endpoints[i] = {"127.0.0.1", free_port()};
  const auto dir = scratch("mesh");
  std::vector<pid_t> pids;
  for (PartyId i = 1; i <= 3; ++i) {
    const pid_t pid = ::fork();
    if (pid == 0) {
      int code = 0;
      try {
        run_sockets(c, i, x[i - 1], endpoints).transcript.save(dir / std::to_string(i));
      } catch (...) {
        code = 1;
      }
      ::_exit(code);
    }
    pids.push_back(pid);
  }
  for (const pid_t pid : pids) {
    int status = 0;
    ::waitpid(pid, &status, 0);
    o.check(WIFEXITED(status) && WEXITSTATUS(status) == 0, "a socket party failed");
  }
  if (!o.pass) return o;
  std::vector<Transcript> parts;
  for (PartyId i = 1; i <= 3; ++i) parts.push_back(Transcript::load(dir / std::to_string(i)));
  const auto merged = merge_transcripts(parts);
  const auto local = run_local(c, x);
  o.check(encode_log(merged.envelopes) == encode_log(local.transcript.envelopes),
          "socket transcript differs from local run");

  const auto saved = dir / "merged";
  merged.save(saved);
  const auto ok = verify_transcript(Transcript::load(saved));
  o.check(ok.ok && ok.replayed, "untouched transcript failed replay: " + ok.message);

  {
    std::fstream f(saved / "envelopes.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(4 * 48 + kHeaderSize + 7);
    char b = 0;
    f.read(&b, 1);
    b = static_cast<char>(b ^ 0x10);
    f.seekp(4 * 48 + kHeaderSize + 7);
    f.write(&b, 1);
  }
  const auto bad = verify_transcript(Transcript::load(saved));
  o.check(!bad.ok, "tampered transcript passed");
  o.check(bad.divergent_index && *bad.divergent_index == 4, "tamper not located at envelope 4");
  return o;
}

Outcome ac11() {
  Outcome o;
  const double tol = std::ldexp(1.0, -40);
  for (std::size_t m = 2; m <= 10; ++m) {
    const auto h = herfindahl(std::vector<std::string>(m, "250"), "1000");
    o.check(std::fabs(h.hhi - 1.0 / static_cast<double>(m)) <= tol, "equal exposures m=" + std::to_string(m));
  }
  std::mt19937_64 gen(0xac11);
  std::uniform_int_distribution<int> cents(1, 99999);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::string> x;
    double s = 0, sq = 0;
    const int m = 2 + t % 9;
    for (int i = 0; i < m; ++i) {
      const int c = cents(gen);
      x.push_back(std::to_string(c / 100) + "." + std::to_string(100 + c % 100).substr(1));
      s += c / 100.0;
      sq += (c / 100.0) * (c / 100.0);
    }
    o.check(std::fabs(herfindahl(x, "1000").hhi - sq / (s * s)) <= tol, "random exposures " + std::to_string(t));
  }
  return o;
}

}  // namespace

int main() {
  criterion("AC1", "golden three-party example", 1, ac1);
  criterion("AC2", "secure sum equals plaintext sum, 1000 sessions", 30, ac2);
  criterion("AC3", "sip1 exact inner product, 500 sessions", 60, ac3);
  criterion("AC4", "sip3 exact inner product, exhaustive and random", 120, ac4);
  criterion("AC5", "sip2 within 2^-48, 200 sessions", 30, ac5);
  criterion("AC6", "correlation within 1e-3 of plaintext, 100 pairs", 60, ac6);
  criterion("AC7", "published values uniform on the sum plane", 0, ac7);
  criterion("AC8", "views independent of inputs given the output", 0, ac8);
  criterion("AC9", "round counts", 0, ac9);
  criterion("AC10", "socket runs match local runs; replay and tamper", 0, ac10);
  criterion("AC11", "herfindahl index", 0, ac11);
  fs::remove_all(fs::temp_directory_path() / ("riskagg-acceptance-" + std::to_string(::getpid())));
  return failures == 0 ? 0 : 1;
}
