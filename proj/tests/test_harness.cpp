#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "riskagg/harness.hpp"

using namespace riskagg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("riskagg-test-" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<PartyInput> xs() {
  return {Fixed::from_decimal("0.1"), Fixed::from_decimal("0.2"), Fixed::from_decimal("0.3")};
}

SessionConfig sum3(std::uint64_t seed) {
  SessionConfig c;
  c.protocol = ProtocolId::secure_sum;
  c.parties = 3;
  c.seed = seed;
  return c;
}

void flip_byte(const fs::path& file, std::size_t offset) {
  std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(static_cast<std::streamoff>(offset));
  char b = 0;
  f.read(&b, 1);
  b = static_cast<char>(b ^ 0x01);
  f.seekp(static_cast<std::streamoff>(offset));
  f.write(&b, 1);
}

}  // namespace

TEST(Bus, RejectsEarlyAndDuplicateMessages) {
  MessageBus bus(3);
  bus.open(1);
  Envelope e;
  e.round = 2;
  e.sender = 1;
  e.recipient = 2;
  EXPECT_THROW(bus.post(e), ProtocolError);
  e.round = 1;
  bus.post(e);
  EXPECT_THROW(bus.post(e), ProtocolError);
  const auto boxes = bus.deliver();
  ASSERT_EQ(boxes.size(), 3u);
  EXPECT_EQ(boxes[1].size(), 1u);
  EXPECT_THROW(bus.deliver(), ProtocolError);
}

TEST(Bus, BroadcastExpandsToEveryPeer) {
  MessageBus bus(3);
  bus.open(1);
  Envelope e;
  e.round = 1;
  e.sender = 2;
  e.recipient = kBroadcast;
  e.type = MsgType::partial_sum;
  bus.post(e);
  const auto boxes = bus.deliver();
  EXPECT_EQ(boxes[0].size(), 1u);
  EXPECT_TRUE(boxes[1].empty());
  EXPECT_EQ(boxes[2].size(), 1u);
}

TEST(Canonical, SortsAndRejectsDuplicates) {
  std::vector<Envelope> log(3);
  log[0].round = 2;
  log[1].round = 1;
  log[1].sender = 2;
  log[2].round = 1;
  log[2].sender = 1;
  canonicalize(log);
  EXPECT_EQ(log[0].sender, 1);
  EXPECT_EQ(log[2].round, 2);
  log.push_back(log[0]);
  EXPECT_THROW(canonicalize(log), ProtocolError);
}

TEST(Transcript, RoundCounts) {
  EXPECT_EQ(run_local(sum3(1), xs()).transcript.rounds(), 2);
  SessionConfig c;
  c.protocol = ProtocolId::sip2;
  c.n = 2;
  c.seed = 1;
  const std::vector<PartyInput> in{std::vector<Fixed>{Fixed::from_decimal("0.5"), Fixed{}},
                                   std::vector<Fixed>{Fixed::from_decimal("0.5"), Fixed{}},
                                   std::monostate{}};
  EXPECT_EQ(run_local(c, in).transcript.rounds(), 3);
}

TEST(Transcript, SaveLoadRoundTrip) {
  const auto r = run_local(sum3(2), xs());
  const auto dir = scratch("roundtrip");
  r.transcript.save(dir);
  for (const char* f : {"config.json", "inputs.json", "envelopes.bin", "result.json", "views.json", "timing.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto back = Transcript::load(dir);
  EXPECT_EQ(back.envelopes, r.transcript.envelopes);
  EXPECT_EQ(back.views, r.transcript.views);
  ASSERT_TRUE(back.result);
  EXPECT_EQ(*back.result, r.result);
  EXPECT_EQ(config_hash(back.config), config_hash(r.transcript.config));
  EXPECT_EQ(back.inputs.size(), 3u);
}

TEST(Transcript, SavedBytesAreStable) {
  const auto a = scratch("stable-a");
  const auto b = scratch("stable-b");
  run_local(sum3(3), xs()).transcript.save(a);
  run_local(sum3(3), xs()).transcript.save(b);
  for (const char* f : {"config.json", "inputs.json", "envelopes.bin", "result.json", "views.json"}) {
    std::ifstream fa(a / f, std::ios::binary), fb(b / f, std::ios::binary);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    EXPECT_EQ(sa.str(), sb.str()) << f;
  }
}

TEST(Verify, UntouchedTranscriptReplays) {
  const auto dir = scratch("verify-ok");
  run_local(sum3(4), xs()).transcript.save(dir);
  const auto rep = verify_transcript(Transcript::load(dir));
  EXPECT_TRUE(rep.ok) << rep.message;
  EXPECT_TRUE(rep.replayed);
}

TEST(Verify, FlippedPayloadByteNamesEnvelope) {
  const auto dir = scratch("verify-tamper");
  const auto r = run_local(sum3(5), xs());
  r.transcript.save(dir);
  // Envelope 2 starts after two frames of 32 + 16 bytes; flip a payload byte.
  flip_byte(dir / "envelopes.bin", 2 * 48 + kHeaderSize + 15);
  const auto rep = verify_transcript(Transcript::load(dir));
  EXPECT_FALSE(rep.ok);
  ASSERT_TRUE(rep.divergent_index);
  EXPECT_EQ(*rep.divergent_index, 2u);
}

TEST(Verify, StructuralChecksWithoutSeed) {
  auto c = sum3(6);
  c.seed.reset();
  auto t = run_local(c, xs()).transcript;
  const auto rep = verify_transcript(t);
  EXPECT_TRUE(rep.ok);
  EXPECT_FALSE(rep.replayed);
  t.envelopes.pop_back();
  t.envelopes.erase(t.envelopes.begin() + 6, t.envelopes.end());
  EXPECT_FALSE(verify_transcript(t).ok);  // round 2 missing
}

TEST(Verify, ReorderedLogRejected) {
  auto t = run_local(sum3(7), xs()).transcript;
  std::swap(t.envelopes[0], t.envelopes[1]);
  const auto rep = verify_transcript(t);
  EXPECT_FALSE(rep.ok);
  EXPECT_EQ(rep.divergent_index, 1u);
}

TEST(Views, RequireCompletedSession) {
  Transcript t;
  EXPECT_THROW(views(t), ProtocolError);
  const auto r = run_local(sum3(8), xs());
  EXPECT_EQ(views(r.transcript).size(), 3u);
}

TEST(Json, ConfigAndInputRoundTrip) {
  SessionConfig c;
  c.protocol = ProtocolId::sip3;
  c.parties = 2;
  c.n = 4;
  c.q = 5;
  c.rsa_bits = 256;
  c.ot_mode = OtMode::padded;
  c.seed = 99;
  c = c.validated();
  const auto back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_EQ(back.ot_mode, OtMode::padded);
  for (const PartyInput& in : {PartyInput{std::monostate{}}, PartyInput{Fixed::from_decimal("0.3")},
                               PartyInput{std::vector<Fixed>{Fixed::from_integer(1)}},
                               PartyInput{std::vector<std::int64_t>{-3, 4}}})
    EXPECT_EQ(input_to_json(input_from_json(input_to_json(in))), input_to_json(in));
  auto d = c;
  d.q = 7;
  EXPECT_NE(config_hash(d), config_hash(c));
  EXPECT_EQ(parse_session_id(hex(c.session)), c.session);
  EXPECT_THROW(parse_session_id("xyz"), ConfigError);
}

TEST(Merge, UnionOfPartialTranscripts) {
  const auto full = run_local(sum3(9), xs()).transcript;
  std::vector<Transcript> parts(3);
  for (PartyId i = 1; i <= 3; ++i) {
    auto& p = parts[i - 1];
    p.config = full.config;
    p.result = full.result;
    p.inputs[i] = full.inputs.at(i);
    p.views[i] = full.views.at(i);
    for (const auto& e : full.envelopes)
      if (e.sender == i || e.recipient == i) p.envelopes.push_back(e);
  }
  const auto merged = merge_transcripts(parts);
  EXPECT_EQ(merged.envelopes, full.envelopes);
  EXPECT_EQ(merged.views, full.views);
  parts[1].config.parties = 4;
  EXPECT_THROW(merge_transcripts(parts), ConfigError);
}

// ---------------------------------------------------------------------------
// Secrecy bench

TEST(Uniformity, ZeroTrialsIsAnError) {
  EXPECT_THROW(uniformity_report({Fixed{}, Fixed{}}, 0, 1), ConfigError);
}

TEST(Uniformity, SingleTrialSkipsTests) {
  const std::vector<Fixed> x{Fixed::from_decimal("0.1"), Fixed::from_decimal("0.2"), Fixed::from_decimal("0.3")};
  const auto rep = uniformity_report(x, 1, 7);
  EXPECT_EQ(rep.samples.size(), 1u);
  EXPECT_FALSE(rep.tests_run);
  EXPECT_FALSE(rep.notice.empty());
  std::ostringstream csv;
  rep.write_csv(csv);
  const std::string text = csv.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_EQ(text.substr(0, 9), "S1,S2,S3\n");
}

TEST(Uniformity, FairMasksPassBiasedMasksFail) {
  const std::vector<Fixed> x{Fixed::from_decimal("0.1"), Fixed::from_decimal("0.2"), Fixed::from_decimal("0.3")};
  const auto fair = uniformity_report(x, 2000, 8);
  EXPECT_EQ(fair.plane_violations, 0u);
  EXPECT_TRUE(fair.tests_run);
  EXPECT_TRUE(fair.uniform());
  const auto biased = uniformity_report(x, 2000, 8, [](const SessionConfig& c, PartyId p) {
    return std::make_unique<BiasedSource>(default_source(c, p));
  });
  EXPECT_EQ(biased.plane_violations, 0u);
  EXPECT_FALSE(biased.uniform());
}

TEST(Uniformity, SeededReportsRepeat) {
  const std::vector<Fixed> x{Fixed::from_decimal("0.5"), Fixed::from_decimal("0.25")};
  std::ostringstream a, b;
  uniformity_report(x, 50, 9).write_csv(a);
  uniformity_report(x, 50, 9).write_csv(b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(ViewIndependence, EqualProductsIndistinguishableOtherwiseNot) {
  SessionConfig c;
  c.protocol = ProtocolId::sip1;
  c.n = 2;
  c.q = 5;
  const std::vector<PartyInput> a{std::vector<std::int64_t>{1, 2}, std::vector<std::int64_t>{3, 1},
                                  std::monostate{}};
  const std::vector<PartyInput> same{std::vector<std::int64_t>{1, 2}, std::vector<std::int64_t>{1, 2},
                                     std::monostate{}};
  const std::vector<PartyInput> diff{std::vector<std::int64_t>{1, 2}, std::vector<std::int64_t>{4, 4},
                                     std::monostate{}};
  const auto eq = view_independence_test(c, a, same, 1, 400, 10);
  EXPECT_FALSE(eq.distinguishable());
  EXPECT_FALSE(eq.projections.empty());
  const auto ne = view_independence_test(c, a, diff, 1, 400, 11);
  EXPECT_TRUE(ne.distinguishable());
  EXPECT_THROW(view_independence_test(c, a, same, 2, 10, 1), ConfigError);
}
