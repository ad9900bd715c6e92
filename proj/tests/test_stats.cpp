#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "riskagg/stats.hpp"

using namespace riskagg;

TEST(Kolmogorov, KnownSurvivalValues) {
  EXPECT_NEAR(stats::kolmogorov_survival(1.0), 0.26999967, 1e-7);
  EXPECT_NEAR(stats::kolmogorov_survival(1.3581), 0.05, 1e-4);
  EXPECT_NEAR(stats::kolmogorov_survival(1.6276), 0.01, 1e-4);
  EXPECT_DOUBLE_EQ(stats::kolmogorov_survival(0.0), 1.0);
  EXPECT_LT(stats::kolmogorov_survival(5.0), 1e-20);
}

TEST(KsUniform, AcceptsUniformRejectsSkewed) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> flat, skewed;
  for (int i = 0; i < 10000; ++i) {
    const double v = u(gen);
    flat.push_back(v);
    skewed.push_back(v * v);
  }
  EXPECT_FALSE(stats::ks_uniform(flat).rejected(0.01));
  EXPECT_TRUE(stats::ks_uniform(skewed).rejected(0.01));
}

TEST(KsUniform, StatisticOnHandComputedSample) {
  const std::vector<double> s{0.1, 0.4, 0.7};
  // D = max over i of (i+1)/n - x_i and x_i - i/n; here 1 - 0.7.
  EXPECT_NEAR(stats::ks_uniform(s).statistic, 0.3, 1e-12);
}

TEST(KsTwoSample, SameVersusShifted) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> a, b, c;
  for (int i = 0; i < 5000; ++i) {
    a.push_back(z(gen));
    b.push_back(z(gen));
    c.push_back(z(gen) + 0.2);
  }
  EXPECT_FALSE(stats::ks_two_sample(a, b).rejected(0.01));
  EXPECT_TRUE(stats::ks_two_sample(a, c).rejected(0.01));
  EXPECT_DOUBLE_EQ(stats::ks_two_sample(std::vector<double>{1, 2}, std::vector<double>{3, 4}).statistic, 1.0);
}

TEST(ChiSquare, PerfectFitAndKnownQuantile) {
  const std::vector<std::uint64_t> even(10, 50);
  EXPECT_DOUBLE_EQ(stats::chi_square_uniform(even).p_value, 1.0);
  // Two cells, counts 60 and 40: stat 4, df 1, p = 0.0455.
  const std::vector<std::uint64_t> two{60, 40};
  const auto r = stats::chi_square_uniform(two);
  EXPECT_DOUBLE_EQ(r.statistic, 4.0);
  EXPECT_NEAR(r.p_value, 0.0455003, 1e-6);
  EXPECT_THROW(stats::chi_square_uniform(std::vector<std::uint64_t>{3}), Error);
}

TEST(Pearson, LinearAndAnti) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{3, 5, 7, 9, 11};
  const std::vector<double> z{5, 4, 3, 2, 1};
  EXPECT_NEAR(stats::pearson(x, y), 1.0, 1e-15);
  EXPECT_NEAR(stats::pearson(x, z), -1.0, 1e-15);
}
