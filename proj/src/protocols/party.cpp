#include <algorithm>
#include <array>

#include "riskagg/protocols.hpp"

namespace riskagg {

std::unique_ptr<PartyState> make_sip1_party(const SessionConfig&, PartyId, PartyInput,
                                            std::unique_ptr<RandomSource>);
std::unique_ptr<PartyState> make_sip2_party(const SessionConfig&, PartyId, PartyInput,
                                            std::unique_ptr<RandomSource>);
std::unique_ptr<PartyState> make_sip3_party(const SessionConfig&, PartyId, PartyInput,
                                            std::unique_ptr<RandomSource>);

namespace {

constexpr std::array<std::uint16_t, 2> kSumRounds{1, 2};
constexpr std::array<std::uint16_t, 3> kSipRounds{1, 2, 3};
constexpr std::array<std::uint16_t, 5> kSip3Rounds{1, 2, 2, 2, 3};

// Largest sip3 ring: every coordinate costs two OTs with n*q^2 branches each.
constexpr std::uint64_t kMaxSip3Ring = std::uint64_t{1} << 20;

void require_parties(const SessionConfig& c, std::uint16_t want) {
  if (c.parties != want)
    throw ConfigError(std::string(protocol_name(c.protocol)) + " runs with exactly " +
                      std::to_string(want) + " parties, got " + std::to_string(c.parties));
}

}  // namespace

std::string_view protocol_name(ProtocolId p) {
  switch (p) {
    case ProtocolId::secure_sum: return "secure_sum";
    case ProtocolId::sip1: return "sip1";
    case ProtocolId::sip2: return "sip2";
    case ProtocolId::sip3: return "sip3";
  }
  return "unknown";
}

ProtocolId parse_protocol(std::string_view name) {
  for (auto p : {ProtocolId::secure_sum, ProtocolId::sip1, ProtocolId::sip2, ProtocolId::sip3})
    if (protocol_name(p) == name) return p;
  if (name == "sum" || name == "secure-sum") return ProtocolId::secure_sum;
  throw ConfigError("unknown protocol '" + std::string(name) + "'");
}

std::uint16_t declared_rounds(ProtocolId p) { return p == ProtocolId::secure_sum ? 2 : 3; }

std::span<const std::uint16_t> phase_rounds(ProtocolId p) {
  switch (p) {
    case ProtocolId::secure_sum: return kSumRounds;
    case ProtocolId::sip1:
    case ProtocolId::sip2: return kSipRounds;
    case ProtocolId::sip3: return kSip3Rounds;
  }
  throw ConfigError("unknown protocol id");
}

std::uint64_t SessionConfig::ring() const { return std::uint64_t{n} * q * q; }

SessionConfig SessionConfig::validated() const {
  SessionConfig c = *this;
  switch (c.protocol) {
    case ProtocolId::secure_sum:
      if (c.parties == 0) throw ConfigError("zero-party config");
      if (c.parties < 2) throw ConfigError("secure_sum needs at least 2 parties");
      if (c.parties == kBroadcast) throw ConfigError("too many parties");
      break;
    case ProtocolId::sip1: {
      require_parties(c, 3);
      if (c.n == 0) throw ConfigError("vector length n must be >= 1");
      if (c.q < 2) throw ConfigError("quantization level q must be >= 2");
      if (c.signed_codes) (void)QuantParams(c.q);
      const u128 bound = u128{c.n} * c.q * c.q;
      if (c.p == 0) {
        c.p = default_prime(c.n, c.q);
      } else {
        if (c.p > kMaxPrime) throw ConfigError("prime p must be below 2^61");
        if (!is_prime_u64(c.p)) throw ConfigError("p = " + std::to_string(c.p) + " is not prime");
        if (u128{c.p} <= bound) throw ConfigError("p must exceed n*q^2");
      }
      break;
    }
    case ProtocolId::sip2:
      require_parties(c, 3);
      if (c.n == 0) throw ConfigError("vector length n must be >= 1");
      if (c.tau == 0) c.tau = std::max<std::uint64_t>(std::uint64_t{1} << 24, std::uint64_t{c.n} + 1);
      if (c.tau <= c.n) throw ConfigError("tau must exceed n");
      if (c.tau < 4) throw ConfigError("tau must be >= 4");
      if (c.tau >= (std::uint64_t{1} << 32)) throw ConfigError("tau must be below 2^32");
      break;
    case ProtocolId::sip3:
      require_parties(c, 2);
      if (c.n == 0) throw ConfigError("vector length n must be >= 1");
      if (c.q < 2) throw ConfigError("quantization level q must be >= 2");
      if (u128{c.n} * c.q * c.q > kMaxSip3Ring)
        throw ConfigError("n*q^2 exceeds the 2^20 branch limit for sip3 oblivious transfers");
      if (c.rsa_bits < kMinRsaBits) throw ConfigError("RSA key size must be >= 64 bits");
      break;
    default:
      throw ConfigError("unknown protocol id");
  }
  if (c.seed && c.session == SessionId{}) {
    ByteWriter w;
    w.raw(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("riskagg/session"), 15));
    w.u64(*c.seed);
    const auto h = hash256(w.bytes());
    std::copy_n(h.begin(), c.session.size(), c.session.begin());
  }
  return c;
}

double SessionResult::as_double() const {
  if (const auto* f = std::get_if<Fixed>(&value)) return f->to_double();
  return static_cast<double>(std::get<std::int64_t>(value));
}

std::string SessionResult::to_string() const {
  if (const auto* f = std::get_if<Fixed>(&value)) {
    std::string text = f->to_string();
    while (text.back() == '0') text.pop_back();
    if (text.back() == '.') text.pop_back();
    return text;
  }
  return std::to_string(std::get<std::int64_t>(value));
}

std::string_view to_string(ViewKind k) {
  switch (k) {
    case ViewKind::input: return "input";
    case ViewKind::generated: return "generated";
    case ViewKind::sent: return "sent";
    case ViewKind::received: return "received";
    case ViewKind::output: return "output";
  }
  return "unknown";
}

std::uint64_t ViewEntry::as_u64() const {
  if (value.size() != 8) throw RangeError("view entry '" + label + "' is not a 64-bit value");
  ByteReader r(value);
  return r.u64();
}

const ViewEntry* PartyView::find(std::string_view label) const {
  for (const auto& e : entries)
    if (e.label == label) return &e;
  return nullptr;
}

// ---------------------------------------------------------------------------

Inbox::Inbox(std::span<const Envelope> envelopes, PartyId self)
    : envelopes_(envelopes), used_(envelopes.size(), false), self_(self) {
  for (std::size_t i = 0; i < envelopes_.size(); ++i)
    for (std::size_t j = i + 1; j < envelopes_.size(); ++j)
      if (envelopes_[i].sender == envelopes_[j].sender && envelopes_[i].type == envelopes_[j].type)
        throw ProtocolError("duplicate sender " + std::to_string(envelopes_[i].sender) + " for " +
                                std::string(to_string(envelopes_[i].type)),
                            self_, envelopes_[i].round);
}

ByteReader Inbox::take(PartyId sender, MsgType type) {
  for (std::size_t i = 0; i < envelopes_.size(); ++i) {
    const auto& e = envelopes_[i];
    if (e.sender == sender && e.type == type) {
      if (used_[i]) throw ProtocolError("message consumed twice", self_, e.round);
      used_[i] = true;
      return ByteReader(e.payload);
    }
  }
  throw ProtocolError("missing round message " + std::string(to_string(type)) + " from party " +
                          std::to_string(sender),
                      self_);
}

void Inbox::finish() const {
  for (std::size_t i = 0; i < envelopes_.size(); ++i)
    if (!used_[i])
      throw ProtocolError("unexpected " + std::string(to_string(envelopes_[i].type)) +
                              " from party " + std::to_string(envelopes_[i].sender),
                          self_, envelopes_[i].round);
}

// ---------------------------------------------------------------------------

PartyState::PartyState(SessionConfig config, PartyId id, std::unique_ptr<RandomSource> rng)
    : config_(std::move(config)), id_(id), rng_(std::move(rng)) {
  if (id_ == 0 || id_ > config_.parties) throw ConfigError("party id out of range");
  if (!rng_) throw ConfigError("party needs a random source");
  view_.party = id_;
}

std::vector<Envelope> PartyState::step(std::size_t phase, std::span<const Envelope> inbox) {
  const auto rounds = phase_rounds(config_.protocol);
  if (phase > rounds.size()) throw fail("session already finished");
  if (phase != next_phase_)
    throw fail("phase " + std::to_string(phase) + " out of order, expected " +
               std::to_string(next_phase_));
  round_ = phase < rounds.size() ? rounds[phase] : rounds.back();
  for (const auto& e : inbox) {
    if (phase == 0) throw fail("message delivered before the first round");
    const std::uint16_t expected = rounds[phase - 1];
    if (e.round != expected)
      throw fail("round " + std::to_string(e.round) + " message delivered while in round " +
                 std::to_string(expected));
    if (e.session != config_.session) throw fail("message from another session");
    if (e.version != kSchemaVersion) throw fail("unsupported schema version");
    if (e.recipient != id_ && e.recipient != kBroadcast) throw fail("message addressed to another party");
    if (e.sender == 0 || e.sender > config_.parties || e.sender == id_)
      throw fail("invalid sender " + std::to_string(e.sender));
  }
  Inbox box(inbox, id_);
  outbox_.clear();
  try {
    on_phase(phase, box);
    box.finish();
  } catch (const ProtocolError&) {
    throw;
  } catch (const Error& e) {
    throw fail(e.what());
  }
  ++next_phase_;
  return std::move(outbox_);
}

void PartyState::send(PartyId to, MsgType type, Bytes payload) {
  Envelope e;
  e.session = config_.session;
  e.round = round_;
  e.sender = id_;
  e.recipient = to;
  e.type = type;
  e.payload = std::move(payload);
  outbox_.push_back(std::move(e));
}

void PartyState::record(ViewKind kind, std::string label, Bytes value, double projection) {
  view_.entries.push_back({round_, kind, std::move(label), std::move(value), projection});
}

void PartyState::finish(SessionResult r) { output_ = std::move(r); }

// ---------------------------------------------------------------------------

void validate_input(const SessionConfig& c, PartyId id, const PartyInput& input) {
  const auto bad = [&](const std::string& what) {
    return RangeError("party " + std::to_string(id) + ": " + what);
  };
  const auto codes = [&]() -> const std::vector<std::int64_t>& {
    const auto* v = std::get_if<std::vector<std::int64_t>>(&input);
    if (!v) throw bad("expects a vector of integer codes");
    if (v->size() != c.n) throw bad("vector length " + std::to_string(v->size()) + " != n");
    return *v;
  };
  switch (c.protocol) {
    case ProtocolId::secure_sum: {
      const auto* x = std::get_if<Fixed>(&input);
      if (!x) throw bad("expects a scalar in [0, 1]");
      if (*x > Fixed::from_integer(1)) throw bad("input out of [0, 1]");
      return;
    }
    case ProtocolId::sip1:
    case ProtocolId::sip3:
      if (c.protocol == ProtocolId::sip1 && id == 3) {
        if (!std::holds_alternative<std::monostate>(input)) throw bad("helper party takes no input");
        return;
      }
      for (auto v : codes()) {
        if (c.protocol == ProtocolId::sip1 && c.signed_codes) {
          const auto half = static_cast<std::int64_t>((c.q - 1) / 2);
          if (v < -half || v > half) throw bad("signed code out of range");
        } else if (v < 0 || static_cast<std::uint64_t>(v) >= c.q) {
          throw bad("code " + std::to_string(v) + " outside Z_q");
        }
      }
      return;
    case ProtocolId::sip2: {
      if (id == 3) {
        if (!std::holds_alternative<std::monostate>(input)) throw bad("helper party takes no input");
        return;
      }
      const auto* v = std::get_if<std::vector<Fixed>>(&input);
      if (!v) throw bad("expects a vector of reals in [0, 1]");
      if (v->size() != c.n) throw bad("vector length " + std::to_string(v->size()) + " != n");
      for (const auto& x : *v)
        if (x > Fixed::from_integer(1)) throw bad("coordinate out of [0, 1]");
      return;
    }
  }
  throw ConfigError("unknown protocol id");
}

std::unique_ptr<PartyState> make_party(const SessionConfig& config, PartyId id, PartyInput input,
                                       std::unique_ptr<RandomSource> rng) {
  validate_input(config, id, input);
  switch (config.protocol) {
    case ProtocolId::secure_sum:
      return std::make_unique<SecureSumParty>(config, id, std::move(rng), std::get<Fixed>(input));
    case ProtocolId::sip1: return make_sip1_party(config, id, std::move(input), std::move(rng));
    case ProtocolId::sip2: return make_sip2_party(config, id, std::move(input), std::move(rng));
    case ProtocolId::sip3: return make_sip3_party(config, id, std::move(input), std::move(rng));
  }
  throw ConfigError("unknown protocol id");
}

SessionResult plaintext_result(const SessionConfig& c, std::span<const PartyInput> inputs) {
  if (inputs.size() != c.parties) throw ConfigError("one input per party expected");
  SessionResult r;
  r.protocol = c.protocol;
  switch (c.protocol) {
    case ProtocolId::secure_sum: {
      Fixed s;
      for (const auto& in : inputs) s = s + std::get<Fixed>(in);
      r.value = s;
      return r;
    }
    case ProtocolId::sip1:
    case ProtocolId::sip3: {
      const auto& x = std::get<std::vector<std::int64_t>>(inputs[0]);
      const auto& y = std::get<std::vector<std::int64_t>>(inputs[1]);
      i128 acc = 0;
      for (std::size_t i = 0; i < x.size(); ++i) acc += i128{x[i]} * y[i];
      r.value = static_cast<std::int64_t>(acc);
      return r;
    }
    case ProtocolId::sip2: {
      const auto& x = std::get<std::vector<Fixed>>(inputs[0]);
      const auto& y = std::get<std::vector<Fixed>>(inputs[1]);
      BigInt acc = 0;
      for (std::size_t i = 0; i < x.size(); ++i)
        acc += detail::from_u128(x[i].raw()) * detail::from_u128(y[i].raw());
      const BigInt rounded = (acc + (BigInt(1) << 63)) >> 64;
      r.value = Fixed::from_raw(static_cast<u128>(detail::to_i128(rounded)));
      r.exactness = Exactness::fixed_point;
      return r;
    }
  }
  throw ConfigError("unknown protocol id");
}

}  // namespace riskagg
