// TCP mesh transport. Party j dials every party i < j and accepts from every
// party i > j. Each connection starts with a HELLO carrying the config hash.
// After its outbox for a phase, a party sends a BARRIER to every peer; a
// protocol frame from peer j belongs to the phase equal to the number of
// barriers already received from j.

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <thread>

#include "riskagg/harness.hpp"

namespace riskagg {

namespace {

using Clock = std::chrono::steady_clock;

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    reset();
    fd_ = std::exchange(o.fd_, -1);
    return *this;
  }
  ~Fd() { reset(); }
  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

[[noreturn]] void sys_fail(const std::string& what) {
  throw ProtocolError(what + ": " + std::strerror(errno));
}

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return static_cast<int>(std::max<std::int64_t>(0, left.count()));
}

addrinfo* resolve(const Endpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  const int rc = ::getaddrinfo(ep.host.empty() ? nullptr : ep.host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) throw ConfigError("cannot resolve " + ep.host + ": " + ::gai_strerror(rc));
  return res;
}

Fd listen_on(const Endpoint& ep) {
  addrinfo* res = resolve(ep, true);
  Fd fd(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
  if (fd.get() < 0) {
    ::freeaddrinfo(res);
    sys_fail("socket");
  }
  const int one = 1;
  ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd.get(), res->ai_addr, res->ai_addrlen) != 0) {
    ::freeaddrinfo(res);
    throw ConfigError("cannot listen on " + ep.host + ":" + std::to_string(ep.port) + ": " +
                      std::strerror(errno));
  }
  ::freeaddrinfo(res);
  if (::listen(fd.get(), 64) != 0) sys_fail("listen");
  return fd;
}

Fd dial(const Endpoint& ep, PartyId self, PartyId peer, Clock::time_point deadline) {
  for (;;) {
    addrinfo* res = resolve(ep, false);
    Fd fd(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
    const int rc = fd.get() < 0 ? -1 : ::connect(fd.get(), res->ai_addr, res->ai_addrlen);
    ::freeaddrinfo(res);
    if (rc == 0) {
      const int one = 1;
      ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return fd;
    }
    if (Clock::now() >= deadline)
      throw TimeoutError("timed out connecting to party " + std::to_string(peer), self);
    std::this_thread::sleep_for(std::chrono::milliseconds(25));
  }
}

void write_all(int fd, std::span<const std::uint8_t> data, PartyId self, Clock::time_point deadline) {
  std::size_t off = 0;
  while (off < data.size()) {
    pollfd p{fd, POLLOUT, 0};
    if (::poll(&p, 1, remaining_ms(deadline)) <= 0)
      throw TimeoutError("timed out writing to a peer", self);
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      sys_fail("send");
    }
    off += static_cast<std::size_t>(n);
  }
}

struct Peer {
  PartyId id = 0;
  Fd fd;
  FrameDecoder decoder;
  Bytes out;
  std::size_t out_pos = 0;
  std::size_t barriers = 0;
  bool closed = false;
};

// Reads whatever is available. Returns false on orderly EOF.
bool pump_read(Peer& p, PartyId self) {
  std::uint8_t buf[65536];
  for (;;) {
    const ssize_t n = ::recv(p.fd.get(), buf, sizeof buf, MSG_DONTWAIT);
    if (n > 0) {
      p.decoder.feed(std::span(buf, static_cast<std::size_t>(n)));
      continue;
    }
    if (n == 0) return false;
    if (errno == EAGAIN || errno == EWOULDBLOCK) return true;
    if (errno == EINTR) continue;
    if (errno == ECONNRESET) return false;
    throw ProtocolError(std::string("recv: ") + std::strerror(errno), self);
  }
}

// After EOF and a full drain, leftover bytes are a cut-off frame.
void check_tail(const Peer& p) {
  if (p.decoder.pending() != 0)
    throw WireError("malformed frame: truncated frame from party " + std::to_string(p.id));
}

void pump_write(Peer& p) {
  while (p.out_pos < p.out.size()) {
    const ssize_t n = ::send(p.fd.get(), p.out.data() + p.out_pos, p.out.size() - p.out_pos,
                             MSG_DONTWAIT | MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK) return;
      if (errno == EINTR) continue;
      throw ProtocolError("party " + std::to_string(p.id) + " disconnected: " + std::strerror(errno));
    }
    p.out_pos += static_cast<std::size_t>(n);
  }
  p.out.clear();
  p.out_pos = 0;
}

void queue(Peer& p, const Envelope& e) {
  const Bytes f = encode_envelope(e);
  p.out.insert(p.out.end(), f.begin(), f.end());
}

Envelope read_hello(Peer& p, PartyId self, Clock::time_point deadline) {
  for (;;) {
    if (auto e = p.decoder.next()) {
      if (e->type != MsgType::hello) throw WireError("expected HELLO as the first frame");
      return *e;
    }
    if (p.closed) {
      check_tail(p);
      throw ProtocolError("peer closed during handshake", self);
    }
    pollfd pfd{p.fd.get(), POLLIN, 0};
    if (::poll(&pfd, 1, remaining_ms(deadline)) <= 0)
      throw TimeoutError("timed out waiting for HELLO" +
                             (p.id ? " from party " + std::to_string(p.id) : std::string()),
                         self);
    if (!pump_read(p, self)) p.closed = true;
  }
}

Envelope control(const SessionConfig& c, MsgType type, std::uint16_t round, PartyId from,
                 PartyId to, Bytes payload) {
  Envelope e;
  e.session = c.session;
  e.round = round;
  e.sender = from;
  e.recipient = to;
  e.type = type;
  e.payload = std::move(payload);
  return e;
}

}  // namespace

Endpoint parse_endpoint(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon + 1 == text.size())
    throw ConfigError("endpoint '" + std::string(text) + "' must be host:port");
  Endpoint ep;
  ep.host = std::string(text.substr(0, colon));
  const std::string port(text.substr(colon + 1));
  std::size_t used = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(port, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != port.size() || v == 0 || v > 65535)
    throw ConfigError("bad port in endpoint '" + std::string(text) + "'");
  ep.port = static_cast<std::uint16_t>(v);
  return ep;
}

RunOutcome run_sockets(const SessionConfig& config, PartyId self, const PartyInput& input,
                       const std::map<PartyId, Endpoint>& endpoints, const SocketOptions& options) {
  const SessionConfig c = config.validated();
  if (c.session == SessionId{})
    throw ConfigError("socket mode needs a shared seed or an explicit session id");
  if (self == 0 || self > c.parties) throw ConfigError("party id out of range");
  for (PartyId i = 1; i <= c.parties; ++i)
    if (!endpoints.count(i)) throw ConfigError("no endpoint for party " + std::to_string(i));

  const auto hash = config_hash(c);
  const SourceFactory& sources = options.sources ? options.sources : SourceFactory(default_source);
  auto party = make_party(c, self, input, sources(c, self));

  // Connection setup.
  const auto setup_deadline = Clock::now() + options.connect_timeout;
  Fd listener = listen_on(endpoints.at(self));
  std::map<PartyId, Peer> peers;
  const Bytes hello_payload(hash.begin(), hash.end());
  for (PartyId j = 1; j < self; ++j) {
    Peer p;
    p.id = j;
    p.fd = dial(endpoints.at(j), self, j, setup_deadline);
    write_all(p.fd.get(), encode_envelope(control(c, MsgType::hello, 0, self, j, hello_payload)), self,
              setup_deadline);
    peers.emplace(j, std::move(p));
  }
  for (PartyId remaining = c.parties - self; remaining > 0; --remaining) {
    pollfd pfd{listener.get(), POLLIN, 0};
    if (::poll(&pfd, 1, remaining_ms(setup_deadline)) <= 0) {
      std::string missing;
      for (PartyId j = self + 1; j <= c.parties; ++j)
        if (!peers.count(j)) missing += (missing.empty() ? "" : ", ") + std::to_string(j);
      throw TimeoutError("timed out waiting for parties " + missing + " to connect", self);
    }
    Peer p;
    p.fd = Fd(::accept(listener.get(), nullptr, nullptr));
    if (p.fd.get() < 0) sys_fail("accept");
    const int one = 1;
    ::setsockopt(p.fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    const Envelope hello = read_hello(p, self, setup_deadline);
    if (hello.sender <= self || hello.sender > c.parties || peers.count(hello.sender))
      throw ProtocolError("unexpected HELLO from party " + std::to_string(hello.sender), self);
    p.id = hello.sender;
    if (hello.payload != hello_payload)
      throw ConfigError("config-hash mismatch with party " + std::to_string(p.id));
    write_all(p.fd.get(), encode_envelope(control(c, MsgType::hello, 0, self, p.id, hello_payload)),
              self, setup_deadline);
    peers.emplace(p.id, std::move(p));
  }
  listener.reset();
  for (PartyId j = 1; j < self; ++j) {
    const Envelope hello = read_hello(peers.at(j), self, setup_deadline);
    if (hello.sender != j) throw ProtocolError("HELLO from the wrong party", self);
    if (hello.payload != hello_payload)
      throw ConfigError("config-hash mismatch with party " + std::to_string(j));
  }

  Transcript t;
  t.config = c;
  t.inputs.emplace(self, input);
  const auto rounds = phase_rounds(c.protocol);
  std::vector<std::vector<Envelope>> by_phase(rounds.size() + 1);

  const auto drain = [&](Peer& p) {
    while (auto e = p.decoder.next()) {
      if (e->type == MsgType::barrier) {
        ++p.barriers;
        continue;
      }
      if (!is_protocol_message(e->type)) throw WireError("unexpected control frame");
      if (e->sender != p.id) throw ProtocolError("frame sender does not match the connection", self);
      if (p.barriers >= rounds.size()) throw ProtocolError("message after the final round", self);
      by_phase[p.barriers + 1].push_back(std::move(*e));
    }
  };
  for (auto& [id, p] : peers) drain(p);

  for (std::size_t phase = 0; phase <= rounds.size(); ++phase) {
    const auto start = Clock::now();
    auto& inbox = by_phase[phase];
    canonicalize(inbox);
    for (const auto& e : inbox) t.envelopes.push_back(e);
    auto out = party->step(phase, inbox);
    if (phase == rounds.size()) break;

    for (auto& e : out) {
      if (e.recipient == kBroadcast) throw ProtocolError("broadcast frames are not sent raw", self);
      queue(peers.at(e.recipient), e);
      t.envelopes.push_back(std::move(e));
    }
    for (auto& [id, p] : peers)
      queue(p, control(c, MsgType::barrier, rounds[phase], self, id, {}));

    const auto deadline = start + options.round_timeout;
    for (;;) {
      bool all_in = true;
      bool all_out = true;
      for (auto& [id, p] : peers) {
        if (p.barriers <= phase) all_in = false;
        if (p.out_pos < p.out.size()) all_out = false;
      }
      if (all_in && all_out) break;
      std::vector<pollfd> fds;
      std::vector<Peer*> order;
      for (auto& [id, p] : peers) {
        short ev = 0;
        if (!p.closed) ev |= POLLIN;
        if (p.out_pos < p.out.size()) ev |= POLLOUT;
        if (ev == 0) continue;
        fds.push_back({p.fd.get(), ev, 0});
        order.push_back(&p);
      }
      const int wait = remaining_ms(deadline);
      const int rc = fds.empty() ? 0 : ::poll(fds.data(), fds.size(), wait);
      if (rc < 0 && errno != EINTR) sys_fail("poll");
      if (rc == 0 || wait == 0) {
        std::string missing;
        for (auto& [id, p] : peers)
          if (p.barriers <= phase) missing += (missing.empty() ? "" : ", ") + std::to_string(id);
        throw TimeoutError("round " + std::to_string(rounds[phase]) +
                               " timed out waiting for parties " + missing,
                           self, rounds[phase]);
      }
      for (std::size_t k = 0; k < fds.size(); ++k) {
        Peer& p = *order[k];
        if (fds[k].revents & POLLOUT) pump_write(p);
        if (fds[k].revents & (POLLIN | POLLHUP | POLLERR)) {
          if (!pump_read(p, self)) p.closed = true;
          drain(p);
          if (p.closed) check_tail(p);
          if (p.closed && p.barriers <= phase)
            throw ProtocolError("party " + std::to_string(p.id) + " disconnected", self,
                                rounds[phase]);
        }
      }
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (t.timing.empty() || t.timing.back().round != rounds[phase])
      t.timing.push_back({rounds[phase], secs});
    else
      t.timing.back().seconds += secs;
  }

  // Let every peer finish reading before the sockets close.
  for (auto& [id, p] : peers) ::shutdown(p.fd.get(), SHUT_WR);
  const auto linger = Clock::now() + std::chrono::seconds(5);
  for (auto& [id, p] : peers) {
    while (!p.closed) {
      pollfd pfd{p.fd.get(), POLLIN, 0};
      if (::poll(&pfd, 1, remaining_ms(linger)) <= 0) break;
      std::uint8_t buf[4096];
      const ssize_t n = ::recv(p.fd.get(), buf, sizeof buf, 0);
      if (n <= 0) p.closed = true;
    }
  }

  if (!party->output() && (c.protocol == ProtocolId::secure_sum || self <= 2))
    throw ProtocolError("session finished without an output", self);
  t.views.emplace(self, party->view());
  t.warnings = party->warnings();
  t.result = party->output();
  canonicalize(t.envelopes);
  RunOutcome outcome;
  if (t.result) outcome.result = *t.result;
  outcome.transcript = std::move(t);
  return outcome;
}

}  // namespace riskagg
