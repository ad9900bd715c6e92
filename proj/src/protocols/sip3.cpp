// Two-party inner product over Z_D, D = n q^2, using 1-out-of-D oblivious
// transfers. Per coordinate i:
//
//   party 1: x_i(2) uniform, x_i(1) = x_i - x_i(2); mask a_i(1) uniform
//   party 2: y_i(1) uniform, y_i(2) = y_i - y_i(1); mask b_i(2) uniform
//   party 2 obtains a_i(2) = -a_i(1) + y_i(2) x_i(1)   (party 1 sends)
//   party 1 obtains b_i(1) = -b_i(2) + y_i(1) x_i(2)   (party 2 sends)
//   p_i(1) = x_i(1) y_i(1) + a_i(1) + b_i(1)
//   p_i(2) = x_i(2) y_i(2) + a_i(2) + b_i(2)
//
// so p_i(1) + p_i(2) = (x_i(1) + x_i(2)) (y_i(1) + y_i(2)) = x_i y_i mod D.
//
// Phases: SHARE (round 1); OT_X, OT_C, OT_A (all round 2); RESULT_SHARE (round 3).
// Views record the OT blinded choices and picks, not the full offset lists.

#include "common.hpp"

namespace riskagg {

using detail::enc_u64;
using detail::proj;

namespace {

std::uint64_t add_mod(std::uint64_t a, std::uint64_t b, std::uint64_t d) {
  return static_cast<std::uint64_t>((u128{a} + b) % d);
}
std::uint64_t sub_mod(std::uint64_t a, std::uint64_t b, std::uint64_t d) {
  return static_cast<std::uint64_t>((u128{a} + d - b) % d);
}

class Sip3Party final : public PartyState {
 public:
  Sip3Party(const SessionConfig& config, PartyId id, std::unique_ptr<RandomSource> rng,
            const PartyInput& input)
      : PartyState(config, id, std::move(rng)), d_(config_.ring()) {
    const auto& codes = std::get<std::vector<std::int64_t>>(input);
    const char* name = id == 1 ? "x" : "y";
    for (std::size_t i = 0; i < codes.size(); ++i) {
      own_.push_back(static_cast<std::uint64_t>(codes[i]));
      record(ViewKind::input, detail::idx(name, i + 1), enc_u64(own_.back()), proj(own_.back(), d_));
    }
  }

 protected:
  void on_phase(std::size_t phase, Inbox& inbox) override {
    switch (phase) {
      case 0: share(); return;
      case 1: offer(inbox); return;
      case 2: choose(inbox); return;
      case 3: respond(inbox); return;
      case 4: combine(inbox); return;
      case 5: output(inbox); return;
    }
  }

 private:
  PartyId peer() const { return id() == 1 ? 2 : 1; }

  // Party 1 labels its shares x, party 2 labels its shares y.
  void share() {
    const std::size_t n = own_.size();
    const bool p1 = id() == 1;
    const char* name = p1 ? "x" : "y";
    const std::uint16_t sent_index = p1 ? 2 : 1;
    const std::uint16_t kept_index = p1 ? 1 : 2;
    kept_.resize(n);
    mask_.resize(n);
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t r = uniform_below(rng(), d_);
      kept_[i] = sub_mod(own_[i], r, d_);
      mask_[i] = uniform_below(rng(), d_);
      record(ViewKind::sent, detail::idx(name, i + 1, sent_index), enc_u64(r), proj(r, d_));
      record(ViewKind::generated, detail::idx(name, i + 1, kept_index), enc_u64(kept_[i]),
             proj(kept_[i], d_));
      record(ViewKind::generated, detail::idx(p1 ? "a" : "b", i + 1, kept_index),
             enc_u64(mask_[i]), proj(mask_[i], d_));
      w.u64(r);
    }
    send(peer(), MsgType::share, w.take());
  }

  // Party 1: x_i(1) (kept), y_i(1) (received). Party 2: y_i(2) (kept), x_i(2) (received).
  void offer(Inbox& inbox) {
    auto in = inbox.take(peer(), MsgType::share);
    if (in.u32() != config_.n) throw fail("share vector has the wrong length");
    const char* name = id() == 1 ? "y" : "x";
    const std::uint16_t index = id() == 1 ? 1 : 2;
    received_.resize(config_.n);
    for (std::size_t i = 0; i < config_.n; ++i) {
      received_[i] = in.below(d_);
      record(ViewKind::received, detail::idx(name, i + 1, index), enc_u64(received_[i]),
             proj(received_[i], d_));
    }
    in.expect_end();

    key_ = std::make_shared<const RsaKeyPair>(rsa_keygen(config_.rsa_bits, rng()));
    ByteWriter w;
    write_bigint(w, key_->n);
    write_bigint(w, key_->e);
    w.u32(config_.n);
    w.u32(static_cast<std::uint32_t>(d_));
    for (std::size_t i = 0; i < config_.n; ++i) {
      // Party 1's list steps by x_i(1); party 2's list steps by x_i(2).
      const std::uint64_t step = id() == 1 ? kept_[i] : received_[i];
      std::vector<std::uint64_t> branches(d_);
      std::uint64_t v = sub_mod(0, mask_[i], d_);
      for (std::uint64_t j = 0; j < d_; ++j) {
        branches[j] = v;
        v = add_mod(v, step, d_);
      }
      senders_.emplace_back(key_, std::move(branches), d_, config_.ot_mode);
      for (const auto& x : senders_.back().offer(rng())) write_bigint(w, x);
    }
    send(peer(), MsgType::ot_x, w.take());
  }

  // Party 1 picks index y_i(1); party 2 picks index y_i(2).
  void choose(Inbox& inbox) {
    auto in = inbox.take(peer(), MsgType::ot_x);
    RsaPublicKey pub{read_bigint(in), read_bigint(in)};
    if (mpz_sizeinbase(pub.n.get_mpz_t(), 2) < kMinRsaBits || pub.e < 3)
      throw fail("peer RSA public key is too small");
    if (in.u32() != config_.n || in.u32() != d_) throw fail("OT offer has the wrong shape");
    ByteWriter w;
    w.u32(config_.n);
    std::vector<mpz_class> offsets(d_);
    for (std::size_t i = 0; i < config_.n; ++i) {
      for (auto& x : offsets) x = read_bigint(in);
      const std::uint64_t choice = id() == 1 ? received_[i] : kept_[i];
      receivers_.emplace_back(pub, d_, choice, d_, config_.ot_mode);
      const mpz_class c = receivers_.back().choose(offsets, rng());
      record(ViewKind::sent, detail::idx("c", i + 1, id()), enc_bigint(c), ratio(c, pub.n));
      write_bigint(w, c);
    }
    in.expect_end();
    send(peer(), MsgType::ot_c, w.take());
  }

  void respond(Inbox& inbox) {
    auto in = inbox.take(peer(), MsgType::ot_c);
    if (in.u32() != config_.n) throw fail("OT choice vector has the wrong length");
    ByteWriter w;
    w.u32(config_.n);
    w.u32(static_cast<std::uint32_t>(d_));
    for (std::size_t i = 0; i < config_.n; ++i) {
      const mpz_class c = read_bigint(in);
      record(ViewKind::received, detail::idx("c", i + 1, peer()), enc_bigint(c), ratio(c, key_->n));
      for (auto a : senders_[i].respond(c)) w.u64(a);
    }
    in.expect_end();
    senders_.clear();
    send(peer(), MsgType::ot_a, w.take());
  }

  void combine(Inbox& inbox) {
    auto in = inbox.take(peer(), MsgType::ot_a);
    if (in.u32() != config_.n || in.u32() != d_) throw fail("OT response has the wrong shape");
    const bool p1 = id() == 1;
    std::vector<std::uint64_t> masked(d_);
    std::uint64_t rho = 0;
    for (std::size_t i = 0; i < config_.n; ++i) {
      for (auto& a : masked) a = in.below(d_);
      const std::uint64_t pick = receivers_[i].finish(masked);
      record(ViewKind::received, detail::idx(p1 ? "b" : "a", i + 1, id()), enc_u64(pick),
             proj(pick, d_));
      // x_i(k) y_i(k) with k = own index
      const std::uint64_t xk = p1 ? kept_[i] : received_[i];
      const std::uint64_t yk = p1 ? received_[i] : kept_[i];
      const std::uint64_t prod = static_cast<std::uint64_t>(u128{xk} * yk % d_);
      const std::uint64_t part = add_mod(add_mod(prod, mask_[i], d_), pick, d_);
      record(ViewKind::generated, detail::idx("p", i + 1, id()), enc_u64(part), proj(part, d_));
      rho = add_mod(rho, part, d_);
    }
    in.expect_end();
    receivers_.clear();
    rho_ = rho;
    record(ViewKind::sent, "rho(" + std::to_string(id()) + ")", enc_u64(rho), proj(rho, d_));
    ByteWriter w;
    w.u64(rho);
    send(peer(), MsgType::result_share, w.take());
  }

  void output(Inbox& inbox) {
    auto in = inbox.take(peer(), MsgType::result_share);
    const std::uint64_t other = in.below(d_);
    in.expect_end();
    record(ViewKind::received, "rho(" + std::to_string(peer()) + ")", enc_u64(other),
           proj(other, d_));
    const std::uint64_t value = add_mod(rho_, other, d_);
    record(ViewKind::output, "rho", enc_u64(value), static_cast<double>(value));
    finish({ProtocolId::sip3, static_cast<std::int64_t>(value), Exactness::exact});
  }

  static Bytes enc_bigint(const mpz_class& v) {
    ByteWriter w;
    write_bigint(w, v);
    return w.take();
  }
  static double ratio(const mpz_class& a, const mpz_class& b) {
    mpq_class r(a, b);
    return r.get_d();
  }

  std::uint64_t d_;
  std::vector<std::uint64_t> own_;
  std::vector<std::uint64_t> kept_;      // x_i(1) or y_i(2)
  std::vector<std::uint64_t> mask_;      // a_i(1) or b_i(2)
  std::vector<std::uint64_t> received_;  // y_i(1) or x_i(2)
  std::shared_ptr<const RsaKeyPair> key_;
  std::vector<OtSender> senders_;
  std::vector<OtReceiver> receivers_;
  std::uint64_t rho_ = 0;
};

}  // namespace

std::unique_ptr<PartyState> make_sip3_party(const SessionConfig& config, PartyId id,
                                            PartyInput input, std::unique_ptr<RandomSource> rng) {
  return std::make_unique<Sip3Party>(config, id, std::move(rng), input);
}

}  // namespace riskagg
