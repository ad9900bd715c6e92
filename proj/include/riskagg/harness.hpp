#pragma once

// Session drivers (in-process bus and TCP mesh), transcripts, and the
// statistical secrecy bench.

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskagg/protocols.hpp"
#include "riskagg/stats.hpp"

namespace riskagg {

using SourceFactory =
    std::function<std::unique_ptr<RandomSource>(const SessionConfig&, PartyId)>;

/// Seeded sessions derive one ChaCha stream per party id; unseeded sessions
/// read OS entropy.
std::unique_ptr<RandomSource> default_source(const SessionConfig& config, PartyId party);

// ---------------------------------------------------------------------------
// Transcripts

struct RoundTiming {
  std::uint16_t round = 0;
  double seconds = 0;
};

struct Transcript {
  SessionConfig config;
  std::map<PartyId, PartyInput> inputs;  // stored for replay; may be partial
  std::vector<Envelope> envelopes;       // canonical order
  std::map<PartyId, PartyView> views;
  std::optional<SessionResult> result;
  std::vector<std::string> warnings;
  std::vector<RoundTiming> timing;

  std::uint16_t rounds() const;

  /// Writes config.json, inputs.json, envelopes.bin, result.json, views.json
  /// and timing.json into `dir`.
  void save(const std::filesystem::path& dir) const;
  static Transcript load(const std::filesystem::path& dir);
};

/// Sorts by (round, type, sender, recipient) and rejects duplicate keys.
void canonicalize(std::vector<Envelope>& log);

/// Union of per-party transcripts from a socket run. Envelopes seen by both
/// endpoints appear once.
Transcript merge_transcripts(const std::vector<Transcript>& parts);

nlohmann::json config_to_json(const SessionConfig& c);
SessionConfig config_from_json(const nlohmann::json& j);
nlohmann::json input_to_json(const PartyInput& in);
PartyInput input_from_json(const nlohmann::json& j);
nlohmann::json result_to_json(const SessionResult& r);

/// BLAKE2b of the canonical config JSON; peers must agree on it.
std::array<std::uint8_t, 32> config_hash(const SessionConfig& c);

std::string hex(std::span<const std::uint8_t> bytes);
SessionId parse_session_id(std::string_view hex_text);

// ---------------------------------------------------------------------------
// In-process execution

/// Per-phase message bus. Posting a message for a later round than the open
/// one, or delivering twice, is a protocol error.
class MessageBus {
 public:
  explicit MessageBus(std::uint16_t parties);

  void open(std::uint16_t round);
  void post(Envelope e);
  /// Closes the phase and returns one inbox per party (index 0 = party 1).
  std::vector<std::vector<Envelope>> deliver();
  const std::vector<Envelope>& log() const { return log_; }

 private:
  std::uint16_t parties_;
  std::uint16_t round_ = 0;
  bool open_ = false;
  std::vector<Envelope> pending_;
  std::vector<Envelope> log_;
};

struct LocalRunOptions {
  SourceFactory sources;                          // default_source when empty
  std::function<void(PartyState&)> customize;     // called once per party before step 0
};

struct RunOutcome {
  SessionResult result;
  Transcript transcript;
};

RunOutcome run_local(const SessionConfig& config, const std::vector<PartyInput>& inputs,
                     const LocalRunOptions& options = {});

// ---------------------------------------------------------------------------
// Replay and verification

struct VerifyReport {
  bool ok = false;
  bool replayed = false;  // false when no seed or inputs were recorded
  std::optional<std::size_t> divergent_index;
  std::string message;
};

VerifyReport verify_transcript(const Transcript& t);

/// Per-party views of a completed session.
const std::map<PartyId, PartyView>& views(const Transcript& t);

// ---------------------------------------------------------------------------
// TCP mesh (one process per party)

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

Endpoint parse_endpoint(std::string_view text);

struct SocketOptions {
  std::chrono::milliseconds round_timeout{30000};
  std::chrono::milliseconds connect_timeout{30000};
  SourceFactory sources;
};

/// Runs party `self` against peers listed in `endpoints` (all parties, keyed
/// by id; the entry for `self` is the listen address). The returned
/// transcript holds this party's envelopes, view and input.
RunOutcome run_sockets(const SessionConfig& config, PartyId self, const PartyInput& input,
                       const std::map<PartyId, Endpoint>& endpoints,
                       const SocketOptions& options = {});

// ---------------------------------------------------------------------------
// Secrecy bench

/// Clears the low byte of every word from the wrapped source. Used as a
/// negative control: masks drawn from it are far from uniform.
class BiasedSource final : public RandomSource {
 public:
  explicit BiasedSource(std::unique_ptr<RandomSource> inner) : inner_(std::move(inner)) {}
  std::uint64_t next_u64() override;

 private:
  std::unique_ptr<RandomSource> inner_;
  std::uint64_t count_ = 0;
};

inline constexpr std::size_t kMinUniformityTrials = 1000;

struct UniformityReport {
  std::uint16_t parties = 0;
  std::size_t trials = 0;
  Fixed expected_sum;
  std::vector<std::vector<ModReal>> samples;  // trials x parties
  std::size_t plane_violations = 0;
  bool tests_run = false;
  std::string notice;
  std::vector<stats::TestResult> marginal_ks;
  std::optional<stats::TestResult> plane_chi2;
  double alpha = 0.01;

  bool uniform() const;
  void write_csv(std::ostream& out) const;
  nlohmann::json to_json() const;
};

/// Runs `trials` Secure-Sum sessions with fixed inputs and fresh masks.
/// Fewer than kMinUniformityTrials trials produce samples but skip the tests.
UniformityReport uniformity_report(const std::vector<Fixed>& inputs, std::size_t trials,
                                   std::uint64_t seed, const SourceFactory& sources = {},
                                   double alpha = 0.01);

struct ProjectionTest {
  std::string label;
  stats::TestResult test;
};

struct IndependenceReport {
  PartyId observer = 0;
  std::size_t trials = 0;
  double alpha = 0.01;
  double per_test_alpha = 0.01;  // Bonferroni-corrected
  std::vector<ProjectionTest> projections;

  bool distinguishable() const;
  nlohmann::json to_json() const;
};

/// Two-sample KS tests on every received and output value of `observer`'s
/// view under two input settings. The observer's own input must match.
IndependenceReport view_independence_test(const SessionConfig& config,
                                          const std::vector<PartyInput>& setting_a,
                                          const std::vector<PartyInput>& setting_b,
                                          PartyId observer, std::size_t trials,
                                          std::uint64_t seed, double alpha = 0.01);

}  // namespace riskagg
