#pragma once

// Risk statistics on top of the secure protocols: per-timestamp aggregates,
// Herfindahl concentration and sample correlation.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "riskagg/harness.hpp"

namespace riskagg {

/// One party's series. Values are kept as the decimal text read from the CSV
/// so scaling by the bound is exact.
struct SeriesInput {
  PartyId party = 0;
  std::vector<std::string> dates;
  std::vector<std::string> values;

  std::vector<double> as_doubles() const;
};

/// Parses a `date,value` CSV. Errors name the offending line.
SeriesInput read_series_csv(std::istream& in, PartyId party, const std::string& source = "input");
SeriesInput read_series_csv(const std::filesystem::path& path, PartyId party);

/// Mode for per-party random streams across the many sessions of one report.
struct RunSettings {
  std::optional<std::uint64_t> seed;
  std::string label = "riskstats";
};

struct AggregateRow {
  std::string date;
  Fixed scaled_total;  // sum of value/B, exact on the lattice
  std::string total;   // scaled_total * B rendered as decimal
  RunOutcome session;
};

/// Secure sum per timestamp of value/B, rescaled by B.
std::vector<AggregateRow> aggregate_sum(const std::vector<SeriesInput>& parties,
                                        const std::string& bound, const RunSettings& run = {});

/// x / B on the lattice; throws RangeError for values outside [0, B].
Fixed scale_to_unit(const std::string& value, const std::string& bound);

struct HerfindahlResult {
  double hhi = 0;
  Fixed total;          // T = sum x_i / B (published)
  Fixed sum_squares;    // Q = sum (x_i / B)^2
  RunOutcome first;
  RunOutcome second;
};

/// HHI = Q / T^2 from two secure sums: T over x_i/B, Q over (x_i/B)^2.
HerfindahlResult herfindahl(const std::vector<std::string>& exposures, const std::string& bound,
                            const RunSettings& run = {});

/// x~_i = (x_i - mean) / (s_x sqrt(t - 1)); unit norm.
std::vector<double> normalize(const std::vector<double>& x);

enum class CorrelationBackend { sip1, sip3 };

struct CorrelationResult {
  double estimate = 0;
  std::int64_t raw_inner_product = 0;  // signed code inner product
  std::uint64_t q = 0;
  double step = 0;                     // quantization step
  double error_bound = 0;              // 3 sqrt(n) step
  std::vector<RunOutcome> sessions;
};

/// Signed quantized codes of a normalized series.
std::vector<std::int64_t> correlation_codes(const std::vector<double>& series, std::uint64_t q);

CorrelationResult secure_correlation(const std::vector<double>& x, const std::vector<double>& y,
                                     std::uint64_t q,
                                     CorrelationBackend backend = CorrelationBackend::sip1,
                                     const RunSettings& run = {}, unsigned rsa_bits = 512);

struct MeanStd {
  double mean = 0;
  double std_dev = 0;
  Fixed sum;
  Fixed sum_squares;
};

/// Cross-party mean and sample standard deviation (m - 1 denominator) from
/// two secure sums, on values already scaled into [0, 1].
MeanStd mean_and_std(const std::vector<Fixed>& values, const RunSettings& run = {});

}  // namespace riskagg
