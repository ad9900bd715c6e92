#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "riskagg/errors.hpp"

namespace riskagg::stats {

/// P(K > lambda) for the limiting Kolmogorov distribution,
/// 2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2).
inline double kolmogorov_survival(double lambda) {
  if (lambda <= 0) return 1.0;
  if (lambda < 0.2) return 1.0;  // series converges slowly; survival is 1 to double precision
  double sum = 0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct TestResult {
  double statistic = 0;
  double p_value = 1;
  bool rejected(double alpha) const { return p_value < alpha; }
};

/// One-sample KS against U[0, 1). Uses Stephens' small-sample correction.
inline TestResult ks_uniform(std::span<const double> samples) {
  if (samples.empty()) throw Error("ks_uniform: no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double di = static_cast<double>(i);
    d = std::max({d, (di + 1) / n - sorted[i], sorted[i] - di / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)};
}

/// Two-sample KS statistic sup |F_a - F_b| and its asymptotic p-value.
inline TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double sn = std::sqrt(ne);
  return {d, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)};
}

/// Pearson chi-square goodness of fit against equal cell probabilities.
inline TestResult chi_square_uniform(std::span<const std::uint64_t> counts) {
  if (counts.size() < 2) throw Error("chi_square_uniform: need at least two cells");
  double total = 0;
  for (auto c : counts) total += static_cast<double>(c);
  if (total == 0) throw Error("chi_square_uniform: no observations");
  const double expected = total / static_cast<double>(counts.size());
  double stat = 0;
  for (auto c : counts) {
    const double diff = static_cast<double>(c) - expected;
    stat += diff * diff / expected;
  }
  const boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return {stat, boost::math::cdf(boost::math::complement(dist, stat))};
}

inline double mean(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Textbook Pearson sample correlation.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("pearson: need equal lengths >= 2");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace riskagg::stats
