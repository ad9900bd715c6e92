#include <algorithm>
#include <chrono>

#include "riskagg/harness.hpp"

namespace riskagg {

std::unique_ptr<RandomSource> default_source(const SessionConfig& config, PartyId party) {
  if (config.seed) return std::make_unique<ChaChaStream>(ChaChaStream::derive(*config.seed, party));
  return std::make_unique<OsEntropy>();
}

void canonicalize(std::vector<Envelope>& log) {
  std::stable_sort(log.begin(), log.end(),
                   [](const Envelope& a, const Envelope& b) { return a.order_key() < b.order_key(); });
  for (std::size_t i = 1; i < log.size(); ++i)
    if (log[i - 1].order_key() == log[i].order_key())
      throw ProtocolError("duplicate envelope key (round " + std::to_string(log[i].round) +
                          ", sender " + std::to_string(log[i].sender) + ", " +
                          std::string(to_string(log[i].type)) + ")");
}

std::uint16_t Transcript::rounds() const {
  std::uint16_t r = 0;
  for (const auto& e : envelopes) r = std::max(r, e.round);
  return r;
}

MessageBus::MessageBus(std::uint16_t parties) : parties_(parties) {}

void MessageBus::open(std::uint16_t round) {
  if (open_) throw ProtocolError("bus phase opened twice");
  if (round < round_) throw ProtocolError("bus rounds must not go backwards");
  round_ = round;
  open_ = true;
}

void MessageBus::post(Envelope e) {
  if (!open_ || e.round > round_)
    throw ProtocolError("round " + std::to_string(e.round) + " message posted before round " +
                            std::to_string(round_) + " was delivered",
                        e.sender, e.round);
  if (e.round < round_)
    throw ProtocolError("stale round " + std::to_string(e.round) + " message", e.sender, e.round);
  if (e.sender == 0 || e.sender > parties_) throw ProtocolError("unknown sender", e.sender, e.round);
  if (e.recipient == kBroadcast) {
    // Broadcast is m-1 unicasts with identical payloads.
    for (PartyId j = 1; j <= parties_; ++j) {
      if (j == e.sender) continue;
      Envelope copy = e;
      copy.recipient = j;
      post(std::move(copy));
    }
    return;
  }
  if (e.recipient == 0 || e.recipient > parties_ || e.recipient == e.sender)
    throw ProtocolError("invalid recipient " + std::to_string(e.recipient), e.sender, e.round);
  for (const auto& p : pending_)
    if (p.order_key() == e.order_key())
      throw ProtocolError("duplicate sender " + std::to_string(e.sender) + " for " +
                              std::string(to_string(e.type)),
                          e.sender, e.round);
  pending_.push_back(std::move(e));
}

std::vector<std::vector<Envelope>> MessageBus::deliver() {
  if (!open_) throw ProtocolError("bus delivered without an open phase");
  open_ = false;
  std::vector<std::vector<Envelope>> inboxes(parties_);
  for (auto& e : pending_) {
    log_.push_back(e);
    inboxes[e.recipient - 1].push_back(std::move(e));
  }
  pending_.clear();
  return inboxes;
}

namespace {

SessionConfig prepare(const SessionConfig& config) {
  SessionConfig c = config.validated();
  if (c.session == SessionId{}) {
    OsEntropy os;
    os.fill(c.session);
  }
  return c;
}

}  // namespace

RunOutcome run_local(const SessionConfig& config, const std::vector<PartyInput>& inputs,
                     const LocalRunOptions& options) {
  const SessionConfig c = prepare(config);
  if (inputs.size() != c.parties)
    throw ConfigError("expected " + std::to_string(c.parties) + " inputs, got " +
                      std::to_string(inputs.size()));
  const SourceFactory& sources = options.sources ? options.sources : SourceFactory(default_source);

  std::vector<std::unique_ptr<PartyState>> parties;
  for (PartyId i = 1; i <= c.parties; ++i) {
    parties.push_back(make_party(c, i, inputs[i - 1], sources(c, i)));
    if (options.customize) options.customize(*parties.back());
  }

  Transcript t;
  t.config = c;
  const auto rounds = phase_rounds(c.protocol);
  MessageBus bus(c.parties);
  std::vector<std::vector<Envelope>> inboxes(c.parties);
  for (std::size_t phase = 0; phase <= rounds.size(); ++phase) {
    const auto start = std::chrono::steady_clock::now();
    const bool sending = phase < rounds.size();
    if (sending) bus.open(rounds[phase]);
    for (auto& party : parties) {
      auto out = party->step(phase, inboxes[party->id() - 1]);
      if (!sending && !out.empty())
        throw ProtocolError("message sent after the final round", party->id());
      for (auto& e : out) bus.post(std::move(e));
    }
    if (!sending) break;
    inboxes = bus.deliver();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (t.timing.empty() || t.timing.back().round != rounds[phase])
      t.timing.push_back({rounds[phase], secs});
    else
      t.timing.back().seconds += secs;
  }

  std::optional<SessionResult> result;
  for (auto& party : parties) {
    t.views.emplace(party->id(), party->view());
    for (const auto& w : party->warnings())
      if (std::find(t.warnings.begin(), t.warnings.end(), w) == t.warnings.end())
        t.warnings.push_back(w);
    if (!party->output()) continue;
    if (result && !(*result == *party->output()))
      throw ProtocolError("parties disagree on the output", party->id());
    result = party->output();
  }
  if (!result) throw ProtocolError("session finished without an output");
  for (PartyId i = 1; i <= c.parties; ++i) t.inputs.emplace(i, inputs[i - 1]);
  t.envelopes = bus.log();
  canonicalize(t.envelopes);
  t.result = result;
  return {*result, std::move(t)};
}

}  // namespace riskagg
