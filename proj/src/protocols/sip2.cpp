// Three-party inner product of real vectors in [0, 1]^n, carried mod tau.
//
// Each coordinate is shared by a random line X_i(t) = x_i + a_i t evaluated at
// t_j = j/4; party j ends round 1 holding X_i(t_j) and Y_i(t_j). With tau >= 4
// the line never wraps, so X_i(t_j) Y_i(t_j) is the true product reduced mod
// tau, and products are carried on the 2^-128 lattice without rounding. The
// only rounding is the final step back to 64 fractional bits.

#include <array>

#include "common.hpp"

namespace riskagg {

using detail::enc;
using detail::proj;

namespace {

using Evals = std::vector<std::pair<std::uint16_t, ModReal>>;
using WideEvals = std::vector<std::pair<std::uint16_t, WideModReal>>;

class Sip2Party final : public PartyState {
 public:
  Sip2Party(const SessionConfig& config, PartyId id, std::unique_ptr<RandomSource> rng,
            const PartyInput& input)
      : PartyState(config, id, std::move(rng)), tau_(config_.tau) {
    if (id == 3) return;
    const char* name = id == 1 ? "x" : "y";
    const auto& v = std::get<std::vector<Fixed>>(input);
    for (std::size_t i = 0; i < v.size(); ++i) {
      own_.push_back(mod_real(v[i], tau_));
      record(ViewKind::input, detail::idx(name, i + 1), enc(own_.back()), v[i].to_double());
    }
  }

 protected:
  void on_phase(std::size_t phase, Inbox& inbox) override {
    switch (phase) {
      case 0: share_inputs(); return;
      case 1: mask(inbox); return;
      case 2: publish(inbox); return;
      case 3: interpolate(inbox); return;
    }
  }

 private:
  void share_inputs() {
    if (id() == 3) return;
    // Party 1 keeps t_1, party 2 keeps t_2; the other two points go out.
    const char* name = id() == 1 ? "X" : "Y";
    const PartyId peer = id() == 1 ? 2 : 1;
    ByteWriter to_peer, to_helper;
    to_peer.u32(config_.n);
    to_helper.u32(config_.n);
    for (std::size_t i = 0; i < own_.size(); ++i) {
      const PolyShare s = poly_share(own_[i], rng());
      for (std::uint16_t j = 1; j <= 3; ++j) {
        const auto kind = j == id() ? ViewKind::generated : ViewKind::sent;
        record(kind, detail::idx(name, i + 1, j), enc(s.values[j - 1]), proj(s.values[j - 1]));
      }
      mine_.push_back(s.values[id() - 1]);
      const Evals peer_part{{peer, s.values[peer - 1]}};
      const Evals helper_part{{3, s.values[2]}};
      write_shares<ModReal>(to_peer, peer_part, put);
      write_shares<ModReal>(to_helper, helper_part, put);
    }
    send(peer, MsgType::poly_eval, to_peer.take());
    send(3, MsgType::poly_eval, to_helper.take());
  }

  std::vector<ModReal> read_evals(Inbox& inbox, PartyId from) {
    auto in = inbox.take(from, MsgType::poly_eval);
    if (in.u32() != config_.n) throw fail("evaluation vector has the wrong length");
    const char* name = from == 1 ? "X" : "Y";
    std::vector<ModReal> out;
    for (std::uint32_t i = 0; i < config_.n; ++i) {
      const auto got = read_shares<ModReal>(in, [&](ByteReader& r) { return r.mod_real(tau_); });
      if (got.size() != 1) throw fail("missing evaluation point");
      if (got[0].first != id()) throw fail("evaluation point routed to the wrong party");
      record(ViewKind::received, detail::idx(name, i + 1, id()), enc(got[0].second),
             proj(got[0].second));
      out.push_back(got[0].second);
    }
    in.expect_end();
    return out;
  }

  void mask(Inbox& inbox) {
    std::vector<ModReal> xs, ys;
    if (id() == 1) {
      xs = mine_;
      ys = read_evals(inbox, 2);
    } else if (id() == 2) {
      xs = read_evals(inbox, 1);
      ys = mine_;
    } else {
      xs = read_evals(inbox, 1);
      ys = read_evals(inbox, 2);
    }
    WideModReal acc = WideModReal::zero(tau_);
    for (std::size_t i = 0; i < xs.size(); ++i) acc += mul_wide(xs[i], ys[i]);
    const std::string me = std::to_string(id());
    record(ViewKind::generated, "P(" + me + ")", enc(acc), proj(acc));

    const auto alpha = uniform_mod<WideModReal>(rng(), tau_, 4);
    const auto beta = uniform_mod<WideModReal>(rng(), tau_, 4);
    const auto z = mask_poly(alpha, beta);
    acc += z[id() - 1];
    for (PartyId k = 1; k <= 3; ++k) {
      const std::string label = "Z(" + me + "," + std::to_string(k) + ")";
      if (k == id()) {
        record(ViewKind::generated, label, enc(z[k - 1]), proj(z[k - 1]));
        continue;
      }
      record(ViewKind::sent, label, enc(z[k - 1]), proj(z[k - 1]));
      ByteWriter w;
      const WideEvals part{{k, z[k - 1]}};
      write_shares<WideModReal>(w, part, put_wide);
      send(k, MsgType::mask_eval, w.take());
    }
    rho_ = acc;
  }

  void publish(Inbox& inbox) {
    for (PartyId k = 1; k <= 3; ++k) {
      if (k == id()) continue;
      auto in = inbox.take(k, MsgType::mask_eval);
      const auto got = read_shares<WideModReal>(in, [&](ByteReader& r) { return r.wide(tau_); });
      in.expect_end();
      if (got.size() != 1 || got[0].first != id()) throw fail("mask evaluation misrouted");
      record(ViewKind::received, "Z(" + std::to_string(k) + "," + std::to_string(id()) + ")",
             enc(got[0].second), proj(got[0].second));
      rho_ += got[0].second;
    }
    record(ViewKind::sent, "rho(" + std::to_string(id()) + ")", enc(rho_), proj(rho_));
    ByteWriter w;
    const WideEvals part{{id(), rho_}};
    write_shares<WideModReal>(w, part, put_wide);
    const Bytes payload = w.take();
    for (PartyId k : {PartyId{1}, PartyId{2}})
      if (k != id()) send(k, MsgType::result_share, payload);
    evals_[id() - 1] = rho_;
  }

  void interpolate(Inbox& inbox) {
    if (id() == 3) return;
    for (PartyId k = 1; k <= 3; ++k) {
      if (k == id()) continue;
      auto in = inbox.take(k, MsgType::result_share);
      const auto got = read_shares<WideModReal>(in, [&](ByteReader& r) { return r.wide(tau_); });
      in.expect_end();
      if (got.size() != 1 || got[0].first != k) throw fail("missing evaluation point");
      record(ViewKind::received, "rho(" + std::to_string(k) + ")", enc(got[0].second),
             proj(got[0].second));
      evals_[k - 1] = got[0].second;
    }
    const WideModReal at_zero = lagrange_at_zero(evals_[0], evals_[1], evals_[2]);
    const ModReal rounded = round_to_lattice(at_zero);
    const Fixed value = Fixed::from_raw(rounded.raw());
    record(ViewKind::output, "rho", enc(rounded), value.to_double());
    finish({ProtocolId::sip2, value, Exactness::fixed_point});
  }

  static void put(ByteWriter& w, const ModReal& v) { w.mod_real(v); }
  static void put_wide(ByteWriter& w, const WideModReal& v) { w.wide(v); }

  std::uint64_t tau_;
  std::vector<ModReal> own_;
  std::vector<ModReal> mine_;
  WideModReal rho_;
  std::array<WideModReal, 3> evals_;
};

}  // namespace

std::unique_ptr<PartyState> make_sip2_party(const SessionConfig& config, PartyId id,
                                            PartyInput input, std::unique_ptr<RandomSource> rng) {
  return std::make_unique<Sip2Party>(config, id, std::move(rng), input);
}

}  // namespace riskagg
