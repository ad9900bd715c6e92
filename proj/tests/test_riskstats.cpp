#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "riskagg/riskstats.hpp"

using namespace riskagg;

namespace {

SeriesInput parse(const std::string& text, PartyId p = 1) {
  std::istringstream in(text);
  return read_series_csv(in, p, "mem");
}

SeriesInput constant(PartyId p, const std::string& v, int rows) {
  std::string text = "date,value\n";
  for (int i = 0; i < rows; ++i) text += "2020-0" + std::to_string(i + 1) + "-01," + v + "\n";
  return parse(text, p);
}

}  // namespace

TEST(Csv, ParsesAndValidates) {
  const auto s = parse("date,value\n2020-01-31, 1.5\n\n2020-02-29,2\n");
  EXPECT_EQ(s.dates, (std::vector<std::string>{"2020-01-31", "2020-02-29"}));
  EXPECT_EQ(s.values, (std::vector<std::string>{"1.5", "2"}));
  EXPECT_EQ(s.as_doubles(), (std::vector<double>{1.5, 2.0}));
}

TEST(Csv, ErrorsNameTheLine) {
  const auto message = [](const std::string& text) {
    try {
      parse(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_EQ(message("date,value\n2020-01-31,1\n2020-02-31,abc\n").substr(0, 7), "mem:3: ");
  EXPECT_NE(message("date,value\n2020-13-01,1\n").find("mem:2"), std::string::npos);
  EXPECT_NE(message("date,value\n2020-02-01,1\n2020-01-01,1\n").find("increasing"), std::string::npos);
  EXPECT_NE(message("date,value\n2020-02-01,-1\n").find("negative"), std::string::npos);
  EXPECT_NE(message("when,what\n").find("header"), std::string::npos);
  EXPECT_NE(message("").find("empty"), std::string::npos);
  EXPECT_NE(message("date,value\n2020-02-01,1,2\n").find("two fields"), std::string::npos);
}

TEST(Aggregate, ConstantSeries) {
  const std::vector<SeriesInput> p{constant(1, "0.1", 3), constant(2, "0.2", 3), constant(3, "0.3", 3)};
  const auto rows = aggregate_sum(p, "1", {});
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.total, "0.6");
    EXPECT_EQ(r.scaled_total, Fixed::from_decimal("0.6"));
  }
}

TEST(Aggregate, BoundRescalesExactly) {
  const std::vector<SeriesInput> p{constant(1, "125.5", 1), constant(2, "400", 1)};
  const auto rows = aggregate_sum(p, "1000", {});
  EXPECT_EQ(rows[0].total, "525.5");
}

TEST(Aggregate, RejectsRaggedAndOutOfBound) {
  const std::vector<SeriesInput> ragged{constant(1, "0.1", 3), constant(2, "0.1", 2)};
  EXPECT_THROW(aggregate_sum(ragged, "1", {}), ConfigError);
  const std::vector<SeriesInput> big{constant(1, "2", 1), constant(2, "0.1", 1)};
  EXPECT_THROW(aggregate_sum(big, "1", {}), RangeError);
  const std::vector<SeriesInput> alone{constant(1, "0.1", 1)};
  EXPECT_THROW(aggregate_sum(alone, "1", {}), ConfigError);
}

TEST(Aggregate, SeededRunsRepeat) {
  const std::vector<SeriesInput> p{constant(1, "0.1", 2), constant(2, "0.2", 2)};
  RunSettings run;
  run.seed = 5;
  const auto a = aggregate_sum(p, "1", run);
  const auto b = aggregate_sum(p, "1", run);
  EXPECT_EQ(a[1].session.transcript.envelopes, b[1].session.transcript.envelopes);
  EXPECT_NE(a[0].session.transcript.envelopes, a[1].session.transcript.envelopes);
}

TEST(Herfindahl, EqualExposures) {
  for (std::size_t m = 2; m <= 10; ++m) {
    const auto h = herfindahl(std::vector<std::string>(m, "37.5"), "100");
    EXPECT_NEAR(h.hhi, 1.0 / static_cast<double>(m), std::ldexp(1.0, -40)) << m;
  }
}

TEST(Herfindahl, MatchesPlaintext) {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> cents(0, 100000);
  for (int t = 0; t < 30; ++t) {
    std::vector<std::string> x;
    double sum = 0, sq = 0;
    for (int i = 0; i < 5; ++i) {
      const int c = cents(gen);
      x.push_back(std::to_string(c / 100) + "." + std::to_string(100 + c % 100).substr(1));
      sum += c / 100.0;
      sq += (c / 100.0) * (c / 100.0);
    }
    EXPECT_NEAR(herfindahl(x, "1000").hhi, sq / (sum * sum), std::ldexp(1.0, -40));
  }
}

TEST(Herfindahl, SingleHolderAndZeroTotal) {
  EXPECT_NEAR(herfindahl({"5", "0", "0"}, "10").hhi, 1.0, 1e-15);
  EXPECT_THROW(herfindahl({"0", "0"}, "10"), RangeError);
}

TEST(Normalize, UnitNormZeroMean) {
  const auto u = normalize({1, 2, 3, 4, 10});
  double s = 0, ss = 0;
  for (double v : u) {
    s += v;
    ss += v * v;
  }
  EXPECT_NEAR(s, 0.0, 1e-15);
  EXPECT_NEAR(ss, 1.0, 1e-15);
  EXPECT_THROW(normalize({2, 2, 2}), RangeError);
  EXPECT_THROW(normalize({2}), RangeError);
}

TEST(Correlation, IdenticalSeriesGiveOne) {
  const std::vector<double> x{1.2, 3.4, 2.2, 5.0, 4.1, 0.3};
  const auto r = secure_correlation(x, x, 65537);
  EXPECT_NEAR(r.estimate, 1.0, r.error_bound);
  EXPECT_EQ(r.sessions.size(), 1u);
}

TEST(Correlation, WithinBoundOfPearson) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> x, y;
    for (int i = 0; i < 100; ++i) {
      x.push_back(z(gen));
      y.push_back(0.6 * x.back() + z(gen));
    }
    RunSettings run;
    run.seed = static_cast<std::uint64_t>(t);
    const auto r = secure_correlation(x, y, 65537, CorrelationBackend::sip1, run);
    EXPECT_LE(std::fabs(r.estimate - stats::pearson(x, y)), r.error_bound);
    EXPECT_LT(r.error_bound, 1e-3);
  }
}

TEST(Correlation, Sip3BackendAgreesWithSip1) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> x, y;
  for (int i = 0; i < 16; ++i) {
    x.push_back(z(gen));
    y.push_back(z(gen) - 0.5 * x.back());
  }
  RunSettings run;
  run.seed = 6;
  const auto a = secure_correlation(x, y, 15, CorrelationBackend::sip1, run);
  const auto b = secure_correlation(x, y, 15, CorrelationBackend::sip3, run, 128);
  EXPECT_EQ(a.raw_inner_product, b.raw_inner_product);
  EXPECT_EQ(b.sessions.size(), 3u);
  EXPECT_LE(std::fabs(b.estimate - stats::pearson(x, y)), b.error_bound);
}

TEST(Correlation, RejectsBadInputs) {
  EXPECT_THROW(secure_correlation({1, 2}, {1, 2, 3}, 5), ConfigError);
  EXPECT_THROW(secure_correlation({1, 2, 3}, {1, 2, 3}, 4), ConfigError);
  EXPECT_THROW(secure_correlation({1, 1, 1}, {1, 2, 3}, 5), RangeError);
}

TEST(MeanStd, MatchesPlaintext) {
  const std::vector<Fixed> v{Fixed::from_decimal("0.1"), Fixed::from_decimal("0.4"),
                             Fixed::from_decimal("0.7"), Fixed::from_decimal("0.2")};
  const auto r = mean_and_std(v);
  EXPECT_NEAR(r.mean, 0.35, 1e-15);
  const double want = std::sqrt(((0.1 - 0.35) * (0.1 - 0.35) + (0.4 - 0.35) * (0.4 - 0.35) +
                                 (0.7 - 0.35) * (0.7 - 0.35) + (0.2 - 0.35) * (0.2 - 0.35)) / 3.0);
  EXPECT_NEAR(r.std_dev, want, 1e-12);
  const auto same = mean_and_std(std::vector<Fixed>(3, Fixed::from_decimal("0.3")));
  EXPECT_EQ(same.std_dev, 0.0);
}
