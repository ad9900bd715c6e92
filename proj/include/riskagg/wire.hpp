#pragma once

// Envelope frame, big-endian throughout:
//
//   offset  size  field
//        0     4  magic "MPCF"
//        4     1  schema version
//        5    16  session id
//       21     2  round
//       23     2  sender
//       25     2  recipient (0xFFFF = broadcast)
//       27     1  message type
//       28     4  payload length
//       32     n  payload

#include <array>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "riskagg/arith.hpp"

namespace riskagg {

using Bytes = std::vector<std::uint8_t>;
using SessionId = std::array<std::uint8_t, 16>;
using PartyId = std::uint16_t;

inline constexpr std::array<std::uint8_t, 4> kMagic{'M', 'P', 'C', 'F'};
inline constexpr std::uint8_t kSchemaVersion = 1;
inline constexpr PartyId kBroadcast = 0xFFFF;
inline constexpr std::size_t kHeaderSize = 32;
inline constexpr std::uint32_t kMaxPayload = 256u << 20;

enum class MsgType : std::uint8_t {
  rand_mask = 1,
  share = 2,
  partial_sum = 3,
  poly_eval = 4,
  mask_eval = 5,
  ot_x = 6,
  ot_c = 7,
  ot_a = 8,
  result_share = 9,
  // Transport control frames; never part of a transcript.
  hello = 0xF0,
  barrier = 0xF1,
};

inline bool is_protocol_message(MsgType t) {
  return static_cast<std::uint8_t>(t) >= 1 && static_cast<std::uint8_t>(t) <= 9;
}

inline std::string_view to_string(MsgType t) {
  switch (t) {
    case MsgType::rand_mask: return "RAND_MASK";
    case MsgType::share: return "SHARE";
    case MsgType::partial_sum: return "PARTIAL_SUM";
    case MsgType::poly_eval: return "POLY_EVAL";
    case MsgType::mask_eval: return "MASK_EVAL";
    case MsgType::ot_x: return "OT_X";
    case MsgType::ot_c: return "OT_C";
    case MsgType::ot_a: return "OT_A";
    case MsgType::result_share: return "RESULT_SHARE";
    case MsgType::hello: return "HELLO";
    case MsgType::barrier: return "BARRIER";
  }
  return "UNKNOWN";
}

struct Envelope {
  std::uint8_t version = kSchemaVersion;
  SessionId session{};
  std::uint16_t round = 0;
  PartyId sender = 0;
  PartyId recipient = 0;
  MsgType type = MsgType::rand_mask;
  Bytes payload;

  /// Canonical log order within a session.
  auto order_key() const {
    return std::tuple(round, static_cast<std::uint8_t>(type), sender, recipient);
  }

  friend bool operator==(const Envelope&, const Envelope&) = default;
};

// ---------------------------------------------------------------------------
// Payload primitives

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { be(v, 2); }
  void u32(std::uint32_t v) { be(v, 4); }
  void u64(std::uint64_t v) { be(v, 8); }
  void u128v(u128 v) {
    u64(static_cast<std::uint64_t>(v >> 64));
    u64(static_cast<std::uint64_t>(v));
  }
  void u256v(const u256& v) {
    for (int w = 3; w >= 0; --w) u64(static_cast<std::uint64_t>(v >> (64 * w)));
  }
  void raw(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

  /// Length-prefixed (u32) byte string.
  void blob(std::span<const std::uint8_t> b) {
    u32(static_cast<std::uint32_t>(b.size()));
    raw(b);
  }

  void mod_real(const ModReal& v) { u128v(v.raw()); }
  void wide(const WideModReal& v) { u256v(v.raw()); }
  void field(const FieldElem& v) { u64(v.value()); }

  Bytes take() { return std::move(out_); }
  const Bytes& bytes() const { return out_; }

 private:
  void be(std::uint64_t v, int n) {
    for (int i = n - 1; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(be(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(be(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(be(4)); }
  std::uint64_t u64() { return be(8); }
  u128 u128v() {
    const u128 hi = u64();
    return (hi << 64) | u64();
  }
  u256 u256v() {
    u256 v = 0;
    for (int w = 0; w < 4; ++w) v = (v << 64) | u256(u64());
    return v;
  }
  std::span<const std::uint8_t> raw(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::span<const std::uint8_t> blob() { return raw(u32()); }

  /// Reads a raw value and rejects anything outside [0, modulus).
  ModReal mod_real(std::uint64_t m) {
    const u128 r = u128v();
    if (r >= (u128{m} << 64)) throw WireError("mod-real value out of range");
    return ModReal::from_raw(r, m);
  }
  WideModReal wide(std::uint64_t m) {
    const u256 r = u256v();
    if (r >= (u256(m) << 128)) throw WireError("wide mod-real value out of range");
    return WideModReal::from_raw(r, m);
  }
  FieldElem field(std::uint64_t p) {
    const std::uint64_t v = u64();
    if (v >= p) throw WireError("field element out of range");
    return FieldElem(v, p);
  }
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t v = u64();
    if (v >= bound) throw WireError("ring element out of range");
    return v;
  }

  std::size_t remaining() const { return in_.size() - pos_; }
  void expect_end() const {
    if (pos_ != in_.size()) throw WireError("trailing bytes in payload");
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw WireError("truncated payload");
  }
  std::uint64_t be(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 8) | in_[pos_++];
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

// Share lists: u16 count, then count x (u16 share index, value).
template <class T, class Put>
void write_shares(ByteWriter& w, std::span<const std::pair<std::uint16_t, T>> shares, Put put) {
  w.u16(static_cast<std::uint16_t>(shares.size()));
  for (const auto& [index, value] : shares) {
    w.u16(index);
    put(w, value);
  }
}

template <class T, class Get>
std::vector<std::pair<std::uint16_t, T>> read_shares(ByteReader& r, Get get) {
  const std::uint16_t count = r.u16();
  std::vector<std::pair<std::uint16_t, T>> out;
  out.reserve(count);
  for (std::uint16_t i = 0; i < count; ++i) {
    const std::uint16_t index = r.u16();
    out.emplace_back(index, get(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Frames

inline Bytes encode_envelope(const Envelope& e) {
  if (e.payload.size() > kMaxPayload) throw WireError("payload too large");
  ByteWriter w;
  w.raw(kMagic);
  w.u8(e.version);
  w.raw(e.session);
  w.u16(e.round);
  w.u16(e.sender);
  w.u16(e.recipient);
  w.u8(static_cast<std::uint8_t>(e.type));
  w.u32(static_cast<std::uint32_t>(e.payload.size()));
  w.raw(e.payload);
  return w.take();
}

struct FrameHeader {
  Envelope envelope;  // payload still empty
  std::uint32_t payload_len = 0;
};

inline FrameHeader decode_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) throw WireError("malformed frame: truncated header");
  ByteReader r(bytes.first(kHeaderSize));
  FrameHeader h;
  const auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin()))
    throw WireError("malformed frame: bad magic");
  h.envelope.version = r.u8();
  if (h.envelope.version != kSchemaVersion)
    throw WireError("malformed frame: unsupported schema version " +
                    std::to_string(h.envelope.version));
  const auto sid = r.raw(16);
  std::copy(sid.begin(), sid.end(), h.envelope.session.begin());
  h.envelope.round = r.u16();
  h.envelope.sender = r.u16();
  h.envelope.recipient = r.u16();
  const std::uint8_t type = r.u8();
  if (!is_protocol_message(static_cast<MsgType>(type)) && type != 0xF0 && type != 0xF1)
    throw WireError("malformed frame: unknown message type " + std::to_string(type));
  h.envelope.type = static_cast<MsgType>(type);
  h.payload_len = r.u32();
  if (h.payload_len > kMaxPayload) throw WireError("malformed frame: payload too large");
  return h;
}

/// Decodes exactly one frame; the span must hold nothing else.
inline Envelope decode_envelope(std::span<const std::uint8_t> bytes) {
  FrameHeader h = decode_header(bytes);
  if (bytes.size() - kHeaderSize < h.payload_len)
    throw WireError("malformed frame: truncated payload");
  if (bytes.size() - kHeaderSize > h.payload_len) throw WireError("malformed frame: trailing bytes");
  h.envelope.payload.assign(bytes.begin() + kHeaderSize, bytes.end());
  return std::move(h.envelope);
}

/// Incremental decoder for a byte stream carrying back-to-back frames.
class FrameDecoder {
 public:
  void feed(std::span<const std::uint8_t> data) { buf_.insert(buf_.end(), data.begin(), data.end()); }

  /// Next complete frame, or nullopt when more bytes are needed.
  std::optional<Envelope> next() {
    if (buf_.size() - pos_ < kHeaderSize) return std::nullopt;
    FrameHeader h = decode_header(std::span(buf_).subspan(pos_));
    const std::size_t total = kHeaderSize + h.payload_len;
    if (buf_.size() - pos_ < total) return std::nullopt;
    h.envelope.payload.assign(buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + kHeaderSize),
                              buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + total));
    pos_ += total;
    if (pos_ == buf_.size()) {
      buf_.clear();
      pos_ = 0;
    } else if (pos_ > (1u << 20)) {
      buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
      pos_ = 0;
    }
    return h.envelope;
  }

  /// Bytes received that do not yet form a whole frame.
  std::size_t pending() const { return buf_.size() - pos_; }

 private:
  Bytes buf_;
  std::size_t pos_ = 0;
};

/// Concatenated frames, as stored in envelopes.bin.
inline Bytes encode_log(std::span<const Envelope> log) {
  Bytes out;
  for (const auto& e : log) {
    const Bytes f = encode_envelope(e);
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

inline std::vector<Envelope> decode_log(std::span<const std::uint8_t> bytes) {
  FrameDecoder dec;
  dec.feed(bytes);
  std::vector<Envelope> out;
  while (auto e = dec.next()) out.push_back(std::move(*e));
  if (dec.pending() != 0) throw WireError("malformed frame: truncated frame at end of log");
  return out;
}

}  // namespace riskagg
