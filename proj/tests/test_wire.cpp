#include <gtest/gtest.h>

#include "riskagg/wire.hpp"

using namespace riskagg;

namespace {

Envelope sample(std::uint16_t round = 1, MsgType type = MsgType::partial_sum) {
  Envelope e;
  for (std::size_t i = 0; i < e.session.size(); ++i) e.session[i] = static_cast<std::uint8_t>(i + 1);
  e.round = round;
  e.sender = 2;
  e.recipient = 3;
  e.type = type;
  e.payload = {0xDE, 0xAD, 0xBE, 0xEF, 0x00};
  return e;
}

}  // namespace

TEST(Wire, HeaderLayoutIsBigEndian) {
  const Bytes f = encode_envelope(sample());
  ASSERT_EQ(f.size(), kHeaderSize + 5);
  EXPECT_EQ(Bytes(f.begin(), f.begin() + 4), Bytes({'M', 'P', 'C', 'F'}));
  EXPECT_EQ(f[4], kSchemaVersion);
  EXPECT_EQ(f[5], 1);   // session byte 0
  EXPECT_EQ(f[20], 16); // session byte 15
  EXPECT_EQ(f[21], 0);  // round hi
  EXPECT_EQ(f[22], 1);  // round lo
  EXPECT_EQ(f[24], 2);  // sender lo
  EXPECT_EQ(f[26], 3);  // recipient lo
  EXPECT_EQ(f[27], static_cast<std::uint8_t>(MsgType::partial_sum));
  EXPECT_EQ(f[31], 5);  // payload length lo
}

TEST(Wire, RoundTrip) {
  const auto e = sample();
  EXPECT_EQ(decode_envelope(encode_envelope(e)), e);
}

TEST(Wire, RejectsBadFrames) {
  Bytes f = encode_envelope(sample());
  Bytes bad_magic = f;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_envelope(bad_magic), WireError);
  Bytes bad_version = f;
  bad_version[4] = 9;
  EXPECT_THROW(decode_envelope(bad_version), WireError);
  Bytes bad_type = f;
  bad_type[27] = 0x42;
  EXPECT_THROW(decode_envelope(bad_type), WireError);
  EXPECT_THROW(decode_envelope(Bytes(f.begin(), f.end() - 1)), WireError);
  EXPECT_THROW(decode_envelope(Bytes(f.begin(), f.begin() + 10)), WireError);
  Bytes trailing = f;
  trailing.push_back(0);
  EXPECT_THROW(decode_envelope(trailing), WireError);
}

TEST(Wire, StreamDecoderHandlesByteAtATime) {
  const std::vector<Envelope> log{sample(0, MsgType::rand_mask), sample(1), sample(2, MsgType::result_share)};
  const Bytes bytes = encode_log(log);
  FrameDecoder dec;
  std::vector<Envelope> out;
  for (auto b : bytes) {
    dec.feed(std::span(&b, 1));
    while (auto e = dec.next()) out.push_back(std::move(*e));
  }
  EXPECT_EQ(out, log);
  EXPECT_EQ(dec.pending(), 0u);
  EXPECT_EQ(decode_log(bytes), log);
  EXPECT_THROW(decode_log(Bytes(bytes.begin(), bytes.end() - 2)), WireError);
}

TEST(Wire, OrderKeySortsByRoundTypeSenderRecipient) {
  auto a = sample(1, MsgType::share);
  auto b = sample(1, MsgType::partial_sum);
  auto c = sample(0, MsgType::result_share);
  EXPECT_LT(c.order_key(), a.order_key());
  EXPECT_LT(a.order_key(), b.order_key());
  b.type = MsgType::share;
  b.sender = 1;
  EXPECT_LT(b.order_key(), a.order_key());
}

TEST(Payload, PrimitivesRoundTrip) {
  ByteWriter w;
  w.u8(7);
  w.u16(0x0102);
  w.u32(0x03040506);
  w.u64(0x0708090A0B0C0D0EULL);
  w.mod_real(mod_real_decimal("2.5", 3));
  w.wide(widen(mod_real_decimal("1.25", 3)));
  w.field(FieldElem(10, 11));
  const Bytes b = w.take();
  EXPECT_EQ(b[1], 0x01);
  EXPECT_EQ(b[2], 0x02);
  ByteReader r(b);
  EXPECT_EQ(r.u8(), 7);
  EXPECT_EQ(r.u16(), 0x0102);
  EXPECT_EQ(r.u32(), 0x03040506u);
  EXPECT_EQ(r.u64(), 0x0708090A0B0C0D0EULL);
  EXPECT_EQ(r.mod_real(3), mod_real_decimal("2.5", 3));
  EXPECT_EQ(r.wide(3), widen(mod_real_decimal("1.25", 3)));
  EXPECT_EQ(r.field(11), FieldElem(10, 11));
  EXPECT_NO_THROW(r.expect_end());
  EXPECT_THROW(r.u8(), WireError);
}

TEST(Payload, OutOfRangeValuesRejected) {
  ByteWriter w;
  w.mod_real(mod_real_decimal("2.5", 3));
  w.field(FieldElem(10, 11));
  const Bytes b = w.take();
  ByteReader r(b);
  EXPECT_THROW(r.mod_real(2), WireError);
  ByteReader r2{std::span<const std::uint8_t>(b).subspan(16)};
  EXPECT_THROW(r2.field(7), WireError);
}

TEST(Payload, ShareListsCarryIndices) {
  const std::vector<std::pair<std::uint16_t, FieldElem>> shares{{1, FieldElem(3, 11)},
                                                                {3, FieldElem(9, 11)}};
  ByteWriter w;
  write_shares<FieldElem>(w, shares, [](ByteWriter& o, const FieldElem& v) { o.field(v); });
  const Bytes b = w.take();
  ByteReader r(b);
  const auto back = read_shares<FieldElem>(r, [](ByteReader& in) { return in.field(11); });
  EXPECT_EQ(back, shares);
}
