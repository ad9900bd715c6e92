// Three-party inner product over F_p. Party 1 holds x, party 2 holds y,
// party 3 is a helper with no input.
//
// Round 1 routing (asymmetric on purpose; party 2 needs x_i(1) and x_i(2) to
// evaluate its partial product):
//   party 1 -> party 2: x_i(1), x_i(2)    party 1 -> party 3: x_i(3)
//   party 2 -> party 1: y_i(1), y_i(2)    party 2 -> party 3: y_i(3)
//
// Partial products:
//   p_i(1) = (x_i(1) + x_i(3)) (y_i(1) + y_i(2))
//   p_i(2) = y_i(3) (x_i(1) + x_i(2)) + x_i(2) (y_i(1) + y_i(2))
//   p_i(3) = x_i(3) y_i(3)

#include <array>

#include "common.hpp"

namespace riskagg {

using detail::enc;
using detail::proj;

namespace {

using Shares = std::vector<std::pair<std::uint16_t, FieldElem>>;

class Sip1Party final : public PartyState {
 public:
  Sip1Party(const SessionConfig& config, PartyId id, std::unique_ptr<RandomSource> rng,
            const PartyInput& input)
      : PartyState(config, id, std::move(rng)), p_(config_.p) {
    if (id == 3) return;
    const auto& codes = std::get<std::vector<std::int64_t>>(input);
    own_.reserve(codes.size());
    const char* name = id == 1 ? "x" : "y";
    for (std::size_t i = 0; i < codes.size(); ++i) {
      const FieldElem v = config_.signed_codes
                              ? signed_embed(codes[i], p_)
                              : FieldElem(static_cast<std::uint64_t>(codes[i]), p_);
      own_.push_back(v);
      record(ViewKind::input, detail::idx(name, i + 1), enc(v), proj(v));
    }
  }

 protected:
  void on_phase(std::size_t phase, Inbox& inbox) override {
    switch (phase) {
      case 0: share_inputs(); return;
      case 1: partial_products(inbox); return;
      case 2: reveal_result_shares(inbox); return;
      case 3: output(inbox); return;
    }
  }

 private:
  // x_i(k) for party 1 / y_i(k) for party 2, k = 1..3
  std::vector<std::array<FieldElem, 3>> mine_;

  void share_inputs() {
    if (id() == 3) return;
    const char* name = id() == 1 ? "x" : "y";
    const PartyId peer = id() == 1 ? 2 : 1;
    ByteWriter to_peer, to_helper;
    to_peer.u32(config_.n);
    to_helper.u32(config_.n);
    for (std::size_t i = 0; i < own_.size(); ++i) {
      const auto s = additive_split(own_[i], 3, rng());
      mine_.push_back({s[0], s[1], s[2]});
      for (std::uint16_t k = 1; k <= 3; ++k)
        record(ViewKind::sent, detail::idx(name, i + 1, k), enc(s[k - 1]), proj(s[k - 1]));
      const Shares peer_part{{1, s[0]}, {2, s[1]}};
      const Shares helper_part{{3, s[2]}};
      write_shares<FieldElem>(to_peer, peer_part, put);
      write_shares<FieldElem>(to_helper, helper_part, put);
    }
    send(peer, MsgType::share, to_peer.take());
    send(3, MsgType::share, to_helper.take());
  }

  // Reads one SHARE payload and checks each coordinate carries exactly the
  // expected share indices.
  std::vector<std::vector<FieldElem>> read_input_shares(Inbox& inbox, PartyId from,
                                                        std::initializer_list<std::uint16_t> want) {
    auto in = inbox.take(from, MsgType::share);
    if (in.u32() != config_.n) throw fail("share vector has the wrong length");
    std::vector<std::vector<FieldElem>> out;
    const char* name = from == 1 ? "x" : "y";
    for (std::uint32_t i = 0; i < config_.n; ++i) {
      const auto got = read_shares<FieldElem>(in, [&](ByteReader& r) { return r.field(p_); });
      if (got.size() != want.size()) throw fail("share-index misrouting");
      std::vector<FieldElem> vals;
      auto w = want.begin();
      for (const auto& [k, v] : got) {
        if (k != *w++) throw fail("share-index misrouting: got share " + std::to_string(k));
        record(ViewKind::received, detail::idx(name, i + 1, k), enc(v), proj(v));
        vals.push_back(v);
      }
      out.push_back(std::move(vals));
    }
    in.expect_end();
    return out;
  }

  void partial_products(Inbox& inbox) {
    FieldElem rho(0, p_);
    if (id() == 1) {
      const auto y = read_input_shares(inbox, 2, {1, 2});
      for (std::size_t i = 0; i < config_.n; ++i)
        rho += (mine_[i][0] + mine_[i][2]) * (y[i][0] + y[i][1]);
    } else if (id() == 2) {
      const auto x = read_input_shares(inbox, 1, {1, 2});
      for (std::size_t i = 0; i < config_.n; ++i)
        rho += mine_[i][2] * (x[i][0] + x[i][1]) + x[i][1] * (mine_[i][0] + mine_[i][1]);
    } else {
      const auto x = read_input_shares(inbox, 1, {3});
      const auto y = read_input_shares(inbox, 2, {3});
      for (std::size_t i = 0; i < config_.n; ++i) rho += x[i][0] * y[i][0];
    }
    const std::string me = std::to_string(id());
    record(ViewKind::generated, "rho(" + me + ")", enc(rho), proj(rho));
    const auto split = additive_split(rho, 3, rng());
    for (PartyId k = 1; k <= 3; ++k) {
      const FieldElem& v = split[k - 1];
      const std::string label = "rho(" + me + "," + std::to_string(k) + ")";
      if (k == id()) {
        result_share_ = v;
        record(ViewKind::generated, label, enc(v), proj(v));
        continue;
      }
      record(ViewKind::sent, label, enc(v), proj(v));
      ByteWriter w;
      const Shares part{{k, v}};
      write_shares<FieldElem>(w, part, put);
      send(k, MsgType::share, w.take());
    }
  }

  void reveal_result_shares(Inbox& inbox) {
    FieldElem r = result_share_;
    for (PartyId m = 1; m <= 3; ++m) {
      if (m == id()) continue;
      auto in = inbox.take(m, MsgType::share);
      const auto got = read_shares<FieldElem>(in, [&](ByteReader& b) { return b.field(p_); });
      in.expect_end();
      if (got.size() != 1 || got[0].first != id()) throw fail("share-index misrouting");
      const FieldElem v = got[0].second;
      record(ViewKind::received, "rho(" + std::to_string(m) + "," + std::to_string(id()) + ")",
             enc(v), proj(v));
      r += v;
    }
    total_ = r;
    record(ViewKind::sent, "R(" + std::to_string(id()) + ")", enc(r), proj(r));
    ByteWriter w;
    const Shares part{{id(), r}};
    write_shares<FieldElem>(w, part, put);
    const Bytes payload = w.take();
    if (id() == 1) send(2, MsgType::result_share, payload);
    if (id() == 2) send(1, MsgType::result_share, payload);
    if (id() == 3) {
      send(1, MsgType::result_share, payload);
      send(2, MsgType::result_share, payload);
    }
  }

  void output(Inbox& inbox) {
    if (id() == 3) return;
    FieldElem sum = total_;
    for (PartyId k : {PartyId{1}, PartyId{2}, PartyId{3}}) {
      if (k == id()) continue;
      auto in = inbox.take(k, MsgType::result_share);
      const auto got = read_shares<FieldElem>(in, [&](ByteReader& b) { return b.field(p_); });
      in.expect_end();
      if (got.size() != 1 || got[0].first != k) throw fail("share-index misrouting");
      record(ViewKind::received, "R(" + std::to_string(k) + ")", enc(got[0].second),
             proj(got[0].second));
      sum += got[0].second;
    }
    const std::int64_t value = config_.signed_codes ? signed_decode(sum)
                                                    : static_cast<std::int64_t>(sum.value());
    record(ViewKind::output, "rho", enc(sum), static_cast<double>(value));
    finish({ProtocolId::sip1, value, Exactness::exact});
  }

  static void put(ByteWriter& w, const FieldElem& v) { w.field(v); }

  std::uint64_t p_;
  std::vector<FieldElem> own_;
  FieldElem result_share_;
  FieldElem total_;
};

}  // namespace

std::unique_ptr<PartyState> make_sip1_party(const SessionConfig& config, PartyId id,
                                            PartyInput input, std::unique_ptr<RandomSource> rng) {
  return std::make_unique<Sip1Party>(config, id, std::move(rng), input);
}

}  // namespace riskagg
