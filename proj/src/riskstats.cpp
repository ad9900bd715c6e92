#include "riskagg/riskstats.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace riskagg {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool is_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  const int month = std::stoi(s.substr(5, 2));
  const int day = std::stoi(s.substr(8, 2));
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

std::optional<std::uint64_t> child_seed(const RunSettings& run, std::string_view what,
                                        std::uint64_t index) {
  if (!run.seed) return std::nullopt;
  return derive_seed(*run.seed, run.label + "/" + std::string(what), index);
}

RunOutcome run_sum(const std::vector<Fixed>& values, std::optional<std::uint64_t> seed) {
  SessionConfig c;
  c.protocol = ProtocolId::secure_sum;
  c.parties = static_cast<std::uint16_t>(values.size());
  c.seed = seed;
  return run_local(c, std::vector<PartyInput>(values.begin(), values.end()));
}

Fixed result_fixed(const RunOutcome& r) { return std::get<Fixed>(r.result.value); }

// (value / bound)^2 rounded to the lattice.
Fixed scaled_square(const std::string& value, const std::string& bound) {
  const auto v = detail::parse_decimal(value);
  const auto b = detail::parse_decimal(bound);
  const BigInt num = v.numerator * b.denominator;
  const BigInt den = v.denominator * b.numerator;
  const BigInt raw = detail::round_div((num * num) << kFracBits, den * den);
  return Fixed::from_raw(static_cast<u128>(detail::to_i128(raw)));
}

Fixed lattice_square(Fixed u) {
  const BigInt r = detail::from_u128(u.raw());
  const BigInt raw = detail::round_div(r * r, BigInt(1) << kFracBits);
  return Fixed::from_raw(static_cast<u128>(detail::to_i128(raw)));
}

// scaled * bound as a decimal string with at most `digits` fractional digits.
std::string rescale(Fixed scaled, const std::string& bound, int digits = 9) {
  const auto b = detail::parse_decimal(bound);
  BigInt pow10 = 1;
  for (int i = 0; i < digits; ++i) pow10 *= 10;
  const BigInt v = detail::round_div(detail::from_u128(scaled.raw()) * b.numerator * pow10,
                                     b.denominator << kFracBits);
  std::string whole = BigInt(v / pow10).str();
  std::string frac = BigInt(v % pow10).str();
  frac.insert(0, static_cast<std::size_t>(digits) - frac.size(), '0');
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  return frac.empty() ? whole : whole + "." + frac;
}

}  // namespace

std::vector<double> SeriesInput::as_doubles() const {
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(std::stod(v));
  return out;
}

SeriesInput read_series_csv(std::istream& in, PartyId party, const std::string& source) {
  SeriesInput s;
  s.party = party;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  const auto fail = [&](const std::string& what) {
    return ConfigError(source + ":" + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!header) {
      if (t != "date,value") throw fail("expected header 'date,value'");
      header = true;
      continue;
    }
    const auto comma = t.find(',');
    if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos)
      throw fail("expected two fields");
    const std::string date = trim(t.substr(0, comma));
    const std::string value = trim(t.substr(comma + 1));
    if (!is_iso_date(date)) throw fail("bad ISO-8601 date '" + date + "'");
    if (!s.dates.empty() && date <= s.dates.back()) throw fail("dates must be strictly increasing");
    try {
      const auto parts = detail::parse_decimal(value);
      if (parts.numerator < 0) throw fail("negative value");
    } catch (const RangeError&) {
      throw fail("bad decimal value '" + value + "'");
    }
    s.dates.push_back(date);
    s.values.push_back(value);
  }
  if (!header) throw ConfigError(source + ": empty file");
  if (s.dates.empty()) throw ConfigError(source + ": no data rows");
  return s;
}

SeriesInput read_series_csv(const std::filesystem::path& path, PartyId party) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return read_series_csv(in, party, path.string());
}

Fixed scale_to_unit(const std::string& value, const std::string& bound) {
  const Fixed u = Fixed::ratio(value, bound);
  if (u > Fixed::from_integer(1))
    throw RangeError("value " + value + " exceeds the scale bound " + bound);
  return u;
}

std::vector<AggregateRow> aggregate_sum(const std::vector<SeriesInput>& parties,
                                        const std::string& bound, const RunSettings& run) {
  if (parties.size() < 2) throw ConfigError("aggregate needs at least two parties");
  const auto& dates = parties.front().dates;
  for (const auto& p : parties)
    if (p.dates != dates)
      throw ConfigError("ragged timestamps: party " + std::to_string(p.party) +
                        " does not cover the same dates as party " +
                        std::to_string(parties.front().party));
  std::vector<AggregateRow> rows;
  for (std::size_t t = 0; t < dates.size(); ++t) {
    std::vector<Fixed> values;
    for (const auto& p : parties) values.push_back(scale_to_unit(p.values[t], bound));
    AggregateRow row;
    row.date = dates[t];
    row.session = run_sum(values, child_seed(run, "sum", t));
    row.scaled_total = result_fixed(row.session);
    row.total = rescale(row.scaled_total, bound);
    rows.push_back(std::move(row));
  }
  return rows;
}

HerfindahlResult herfindahl(const std::vector<std::string>& exposures, const std::string& bound,
                            const RunSettings& run) {
  if (exposures.size() < 2) throw ConfigError("herfindahl needs at least two parties");
  std::vector<Fixed> shares, squares;
  for (const auto& x : exposures) {
    shares.push_back(scale_to_unit(x, bound));
    squares.push_back(scaled_square(x, bound));
  }
  HerfindahlResult r;
  r.first = run_sum(shares, child_seed(run, "hhi-total", 0));
  r.total = result_fixed(r.first);
  if (r.total.raw() == 0) throw RangeError("herfindahl undefined: total exposure is zero");
  r.second = run_sum(squares, child_seed(run, "hhi-squares", 0));
  r.sum_squares = result_fixed(r.second);
  const double t = r.total.to_double();
  r.hhi = r.sum_squares.to_double() / (t * t);
  return r;
}

std::vector<double> normalize(const std::vector<double>& x) {
  if (x.size() < 2) throw RangeError("normalize needs at least two observations");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0;
  for (double v : x) ss += (v - mean) * (v - mean);
  if (!(ss > 0)) throw RangeError("degenerate input: constant series");
  // s_x sqrt(t - 1) = sqrt(sum of squared deviations)
  const double norm = std::sqrt(ss);
  std::vector<double> out;
  out.reserve(x.size());
  for (double v : x) out.push_back((v - mean) / norm);
  return out;
}

std::vector<std::int64_t> correlation_codes(const std::vector<double>& series, std::uint64_t q) {
  const QuantParams params(q);
  std::vector<std::int64_t> out;
  for (double u : normalize(series)) out.push_back(quantize(u, params));
  return out;
}

CorrelationResult secure_correlation(const std::vector<double>& x, const std::vector<double>& y,
                                     std::uint64_t q, CorrelationBackend backend,
                                     const RunSettings& run, unsigned rsa_bits) {
  if (x.size() != y.size()) throw ConfigError("series lengths differ");
  if (x.size() < 2) throw ConfigError("correlation needs at least two observations");
  const QuantParams params(q);
  const auto cx = correlation_codes(x, q);
  const auto cy = correlation_codes(y, q);
  const auto n = static_cast<std::uint32_t>(x.size());

  CorrelationResult r;
  r.q = q;
  r.step = params.step();
  r.error_bound = 3.0 * std::sqrt(static_cast<double>(n)) * r.step;

  if (backend == CorrelationBackend::sip1) {
    SessionConfig c;
    c.protocol = ProtocolId::sip1;
    c.n = n;
    c.q = q;
    c.signed_codes = true;
    c.seed = child_seed(run, "corr-sip1", 0);
    r.sessions.push_back(run_local(c, {cx, cy, std::monostate{}}));
    r.raw_inner_product = std::get<std::int64_t>(r.sessions.back().result.value);
  } else {
    // Codes shifted into [0, q). Three sessions give sum x'y', sum x' and
    // sum y'; the last two disclose each party's code sum to the peer.
    const std::int64_t h = params.half();
    std::vector<std::int64_t> sx, sy;
    for (auto v : cx) sx.push_back(v + h);
    for (auto v : cy) sy.push_back(v + h);
    const std::vector<std::int64_t> ones(n, 1);
    SessionConfig c;
    c.protocol = ProtocolId::sip3;
    c.parties = 2;
    c.n = n;
    c.q = q;
    c.rsa_bits = rsa_bits;
    const auto session = [&](const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b,
                             std::uint64_t index) {
      c.seed = child_seed(run, "corr-sip3", index);
      c.session = SessionId{};
      r.sessions.push_back(run_local(c, {a, b}));
      return std::get<std::int64_t>(r.sessions.back().result.value);
    };
    const std::int64_t ip = session(sx, sy, 0);
    const std::int64_t sum_x = session(sx, ones, 1);
    const std::int64_t sum_y = session(ones, sy, 2);
    r.raw_inner_product = ip - h * sum_x - h * sum_y + static_cast<std::int64_t>(n) * h * h;
  }
  r.estimate = static_cast<double>(r.raw_inner_product) * r.step * r.step;
  return r;
}

MeanStd mean_and_std(const std::vector<Fixed>& values, const RunSettings& run) {
  if (values.size() < 2) throw ConfigError("mean and std need at least two parties");
  std::vector<Fixed> squares;
  for (const auto& v : values) squares.push_back(lattice_square(v));
  MeanStd out;
  out.sum = result_fixed(run_sum(values, child_seed(run, "mean", 0)));
  out.sum_squares = result_fixed(run_sum(squares, child_seed(run, "mean-squares", 0)));
  const double m = static_cast<double>(values.size());
  const double s = out.sum.to_double();
  out.mean = s / m;
  double var = (out.sum_squares.to_double() - s * s / m) / (m - 1);
  // Variance under the squaring rounding floor reads as zero.
  if (var < m * std::ldexp(1.0, -64)) var = 0;
  out.std_dev = std::sqrt(var);
  return out;
}

}  // namespace riskagg
