#include <map>

#include "riskagg/harness.hpp"

namespace riskagg {

std::uint64_t BiasedSource::next_u64() {
  ++count_;
  return inner_->next_u64() & ~std::uint64_t{0xFF};
}

bool UniformityReport::uniform() const {
  if (!tests_run || plane_violations != 0) return false;
  for (const auto& t : marginal_ks)
    if (t.rejected(alpha)) return false;
  return !(plane_chi2 && plane_chi2->rejected(alpha));
}

void UniformityReport::write_csv(std::ostream& out) const {
  for (std::uint16_t i = 1; i <= parties; ++i) out << (i > 1 ? "," : "") << "S" << i;
  out << "\n";
  for (const auto& row : samples) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i > 0 ? "," : "") << Fixed::from_raw(row[i].raw()).to_string(18);
    out << "\n";
  }
}

nlohmann::json UniformityReport::to_json() const {
  nlohmann::json j = {{"parties", parties},
                      {"trials", trials},
                      {"expected_sum", expected_sum.to_string()},
                      {"plane_violations", plane_violations},
                      {"tests_run", tests_run},
                      {"alpha", alpha}};
  if (!notice.empty()) j["notice"] = notice;
  nlohmann::json ks = nlohmann::json::array();
  for (std::size_t i = 0; i < marginal_ks.size(); ++i)
    ks.push_back({{"marginal", "S" + std::to_string(i + 1)},
                  {"statistic", marginal_ks[i].statistic},
                  {"p_value", marginal_ks[i].p_value}});
  j["ks"] = ks;
  if (plane_chi2)
    j["chi_square"] = {{"statistic", plane_chi2->statistic}, {"p_value", plane_chi2->p_value}};
  j["uniform"] = uniform();
  return j;
}

UniformityReport uniformity_report(const std::vector<Fixed>& inputs, std::size_t trials,
                                   std::uint64_t seed, const SourceFactory& sources, double alpha) {
  if (trials == 0) throw ConfigError("insufficient trials: need at least one");
  if (inputs.size() < 2) throw ConfigError("uniformity report needs at least two parties");
  UniformityReport rep;
  rep.parties = static_cast<std::uint16_t>(inputs.size());
  rep.trials = trials;
  rep.alpha = alpha;
  const std::uint64_t m = rep.parties;

  ModReal expected = ModReal::zero(m);
  Fixed plain;
  for (const auto& x : inputs) {
    expected += mod_real(x, m);
    plain = plain + x;
  }
  rep.expected_sum = plain;

  std::vector<PartyInput> in(inputs.begin(), inputs.end());
  LocalRunOptions opts;
  opts.sources = sources;
  rep.samples.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    SessionConfig c;
    c.protocol = ProtocolId::secure_sum;
    c.parties = rep.parties;
    c.seed = derive_seed(seed, "uniformity", t);
    const auto run = run_local(c, in, opts);
    std::vector<ModReal> row;
    ModReal sum = ModReal::zero(m);
    for (PartyId i = 1; i <= rep.parties; ++i) {
      const auto* e = run.transcript.views.at(i).find("S[" + std::to_string(i) + "]");
      if (e == nullptr) throw ProtocolError("view lacks the published partial sum", i);
      ByteReader r(e->value);
      row.push_back(r.mod_real(m));
      sum += row.back();
    }
    if (!(sum == expected)) ++rep.plane_violations;
    rep.samples.push_back(std::move(row));
  }

  if (trials < kMinUniformityTrials) {
    rep.notice = "fewer than " + std::to_string(kMinUniformityTrials) +
                 " trials: uniformity tests skipped";
    return rep;
  }
  rep.tests_run = true;
  for (std::uint16_t i = 0; i < rep.parties; ++i) {
    std::vector<double> u;
    u.reserve(trials);
    for (const auto& row : rep.samples) u.push_back(row[i].to_double() / static_cast<double>(m));
    rep.marginal_ks.push_back(stats::ks_uniform(u));
  }
  // (S_1, S_2) range freely over [0, m)^2; the remaining coordinates are
  // pinned by the sum constraint.
  constexpr int kGrid = 10;
  std::vector<std::uint64_t> counts(kGrid * kGrid, 0);
  for (const auto& row : rep.samples) {
    const auto cell = [&](const ModReal& v) {
      const int c = static_cast<int>(v.to_double() / static_cast<double>(m) * kGrid);
      return std::min(c, kGrid - 1);
    };
    ++counts[static_cast<std::size_t>(cell(row[0]) * kGrid + cell(row[1]))];
  }
  rep.plane_chi2 = stats::chi_square_uniform(counts);
  return rep;
}

bool IndependenceReport::distinguishable() const {
  for (const auto& p : projections)
    if (p.test.p_value < per_test_alpha) return true;
  return false;
}

nlohmann::json IndependenceReport::to_json() const {
  nlohmann::json tests = nlohmann::json::array();
  for (const auto& p : projections)
    tests.push_back({{"label", p.label}, {"statistic", p.test.statistic}, {"p_value", p.test.p_value}});
  return {{"observer", observer},
          {"trials", trials},
          {"alpha", alpha},
          {"per_test_alpha", per_test_alpha},
          {"distinguishable", distinguishable()},
          {"projections", tests}};
}

IndependenceReport view_independence_test(const SessionConfig& config,
                                          const std::vector<PartyInput>& setting_a,
                                          const std::vector<PartyInput>& setting_b,
                                          PartyId observer, std::size_t trials,
                                          std::uint64_t seed, double alpha) {
  if (trials < 2) throw ConfigError("view independence needs at least two trials per setting");
  if (setting_a.size() != config.parties || setting_b.size() != config.parties)
    throw ConfigError("malformed pairing: one input per party expected in each setting");
  if (observer == 0 || observer > config.parties)
    throw ConfigError("malformed pairing: observer is not a party");
  if (input_to_json(setting_a[observer - 1]) != input_to_json(setting_b[observer - 1]))
    throw ConfigError("malformed pairing: the observer's own input differs between settings");

  const auto collect = [&](const std::vector<PartyInput>& inputs, std::string_view tag) {
    std::map<std::string, std::vector<double>> samples;
    for (std::size_t t = 0; t < trials; ++t) {
      SessionConfig c = config;
      c.seed = derive_seed(seed, tag, t);
      c.session = SessionId{};
      const auto run = run_local(c, inputs);
      for (const auto& e : run.transcript.views.at(observer).entries)
        if (e.kind == ViewKind::received || e.kind == ViewKind::output)
          samples[e.label].push_back(e.projection);
    }
    return samples;
  };
  const auto a = collect(setting_a, "view-a");
  const auto b = collect(setting_b, "view-b");

  IndependenceReport rep;
  rep.observer = observer;
  rep.trials = trials;
  rep.alpha = alpha;
  for (const auto& [label, xs] : a) {
    const auto it = b.find(label);
    if (it == b.end()) throw ProtocolError("view label '" + label + "' missing in one setting");
    rep.projections.push_back({label, stats::ks_two_sample(xs, it->second)});
  }
  rep.per_test_alpha = rep.projections.empty() ? alpha : alpha / static_cast<double>(rep.projections.size());
  return rep;
}

}  // namespace riskagg
