#pragma once

// Round-based party state machines for Secure-Sum and the three secure inner
// product protocols.
//
// A driver calls step(0, {}) first, then step(k, inbox_k) for k = 1..phases(),
// where inbox_k holds every envelope addressed to the party during phase k-1.
// Each phase belongs to one protocol round (see phase_rounds). SIP3 runs its
// oblivious transfers as three phases inside round 2; they use distinct
// message types so envelope keys stay unique.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "riskagg/arith.hpp"
#include "riskagg/ot.hpp"
#include "riskagg/random.hpp"
#include "riskagg/wire.hpp"

namespace riskagg {

enum class ProtocolId : std::uint8_t { secure_sum = 1, sip1 = 2, sip2 = 3, sip3 = 4 };

std::string_view protocol_name(ProtocolId p);
ProtocolId parse_protocol(std::string_view name);  // throws ConfigError

/// Rounds a completed transcript must show.
std::uint16_t declared_rounds(ProtocolId p);

/// Round number of each outbound phase.
std::span<const std::uint16_t> phase_rounds(ProtocolId p);

struct SessionConfig {
  ProtocolId protocol = ProtocolId::secure_sum;
  std::uint16_t parties = 3;  // m
  std::uint32_t n = 1;        // vector length for inner products
  std::uint64_t q = 0;        // code alphabet size (sip1, sip3)
  std::uint64_t p = 0;        // sip1 prime; 0 picks the default
  std::uint64_t tau = 0;      // sip2 modulus; 0 picks the default
  bool signed_codes = false;  // sip1 inputs are symmetric signed codes
  unsigned rsa_bits = kDefaultRsaBits;
  OtMode ot_mode = OtMode::raw;
  std::optional<std::uint64_t> seed;
  SessionId session{};

  /// Copy with defaults filled in. Throws ConfigError on any bound violation.
  SessionConfig validated() const;

  /// Ring size n*q^2 used by sip3.
  std::uint64_t ring() const;
};

/// Secure-Sum: Fixed in [0, 1]. sip1/sip3: integer codes. sip2: Fixed in [0, 1].
/// Helpers (party 3 in sip1/sip2) take monostate.
using PartyInput = std::variant<std::monostate, Fixed, std::vector<Fixed>, std::vector<std::int64_t>>;

enum class Exactness : std::uint8_t { exact, fixed_point };

struct SessionResult {
  ProtocolId protocol = ProtocolId::secure_sum;
  std::variant<Fixed, std::int64_t> value;
  Exactness exactness = Exactness::exact;

  double as_double() const;
  std::string to_string() const;
  friend bool operator==(const SessionResult&, const SessionResult&) = default;
};

enum class ViewKind : std::uint8_t { input, generated, sent, received, output };
std::string_view to_string(ViewKind k);

struct ViewEntry {
  std::uint16_t round = 0;
  ViewKind kind = ViewKind::generated;
  std::string label;
  Bytes value;        // canonical big-endian encoding
  double projection;  // scalar in [0, 1) (or the real value) for statistical tests

  std::uint64_t as_u64() const;
  friend bool operator==(const ViewEntry&, const ViewEntry&) = default;
};

struct PartyView {
  PartyId party = 0;
  std::vector<ViewEntry> entries;

  const ViewEntry* find(std::string_view label) const;
  friend bool operator==(const PartyView&, const PartyView&) = default;
};

/// Messages delivered to one party for one phase. Every envelope must be
/// consumed exactly once.
class Inbox {
 public:
  Inbox(std::span<const Envelope> envelopes, PartyId self);

  /// Payload of the single envelope from `sender` with type `type`.
  ByteReader take(PartyId sender, MsgType type);

  /// Throws if anything was left unconsumed.
  void finish() const;

 private:
  std::span<const Envelope> envelopes_;
  std::vector<bool> used_;
  PartyId self_;
};

class PartyState {
 public:
  PartyState(SessionConfig config, PartyId id, std::unique_ptr<RandomSource> rng);
  virtual ~PartyState() = default;
  PartyState(const PartyState&) = delete;
  PartyState& operator=(const PartyState&) = delete;

  PartyId id() const { return id_; }
  const SessionConfig& config() const { return config_; }

  /// Outbound phases; step() is called phases() + 1 times.
  std::size_t phases() const { return phase_rounds(config_.protocol).size(); }

  std::vector<Envelope> step(std::size_t phase, std::span<const Envelope> inbox);

  bool done() const { return next_phase_ > phases(); }
  const std::optional<SessionResult>& output() const { return output_; }
  const PartyView& view() const { return view_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 protected:
  virtual void on_phase(std::size_t phase, Inbox& inbox) = 0;

  void send(PartyId to, MsgType type, Bytes payload);
  void record(ViewKind kind, std::string label, Bytes value, double projection);
  void finish(SessionResult r);
  void warn(std::string message) { warnings_.push_back(std::move(message)); }

  RandomSource& rng() { return *rng_; }
  std::uint16_t round() const { return round_; }
  ProtocolError fail(const std::string& what) const { return ProtocolError(what, id_, round_); }

  SessionConfig config_;

 private:
  PartyId id_;
  std::unique_ptr<RandomSource> rng_;
  std::size_t next_phase_ = 0;
  std::uint16_t round_ = 0;
  std::vector<Envelope> outbox_;
  PartyView view_;
  std::optional<SessionResult> output_;
  std::vector<std::string> warnings_;
};

/// Secure-Sum party. Masks can be pinned before the first step, which the
/// golden-example tests use.
class SecureSumParty final : public PartyState {
 public:
  SecureSumParty(SessionConfig config, PartyId id, std::unique_ptr<RandomSource> rng, Fixed x);
  void pin_masks(std::map<PartyId, ModReal> masks);

 protected:
  void on_phase(std::size_t phase, Inbox& inbox) override;

 private:
  ModReal x_;
  std::map<PartyId, ModReal> pinned_;
  std::map<PartyId, ModReal> sent_;
  ModReal partial_;
};

std::unique_ptr<PartyState> make_party(const SessionConfig& config, PartyId id, PartyInput input,
                                       std::unique_ptr<RandomSource> rng);

/// Checks an input against the protocol's domain for the given party.
void validate_input(const SessionConfig& config, PartyId id, const PartyInput& input);

/// Plaintext value of the functional, used by oracles and tests.
SessionResult plaintext_result(const SessionConfig& config, std::span<const PartyInput> inputs);

}  // namespace riskagg
