#include "common.hpp"

namespace riskagg {

using detail::enc;
using detail::proj;

SecureSumParty::SecureSumParty(SessionConfig config, PartyId id, std::unique_ptr<RandomSource> rng,
                               Fixed x)
    : PartyState(std::move(config), id, std::move(rng)), x_(mod_real(x, config_.parties)) {
  if (config_.parties == 2)
    warn("two-party secure sum: the output reveals the peer's input to each party");
  record(ViewKind::input, detail::idx("x", id), enc(x_), x_.to_double());
}

void SecureSumParty::pin_masks(std::map<PartyId, ModReal> masks) {
  for (const auto& [j, r] : masks)
    if (j == id() || j == 0 || j > config_.parties || r.modulus() != config_.parties)
      throw ConfigError("pinned mask for an invalid peer or modulus");
  pinned_ = std::move(masks);
}

void SecureSumParty::on_phase(std::size_t phase, Inbox& inbox) {
  const std::uint16_t m = config_.parties;
  const PartyId self = id();
  switch (phase) {
    case 0:
      for (PartyId j = 1; j <= m; ++j) {
        if (j == self) continue;
        const auto it = pinned_.find(j);
        const ModReal r = it != pinned_.end() ? it->second : uniform_mod<ModReal>(rng(), m);
        sent_.emplace(j, r);
        record(ViewKind::sent, detail::pair("R", self, j), enc(r), proj(r));
        send(j, MsgType::rand_mask, enc(r));
      }
      return;
    case 1: {
      ModReal s = x_;
      for (PartyId j = 1; j <= m; ++j) {
        if (j == self) continue;
        auto in = inbox.take(j, MsgType::rand_mask);
        const ModReal r = in.mod_real(m);
        in.expect_end();
        record(ViewKind::received, detail::pair("R", j, self), enc(r), proj(r));
        s += r;
        s -= sent_.at(j);
      }
      partial_ = s;
      record(ViewKind::sent, detail::idx("S", self), enc(s), proj(s));
      for (PartyId j = 1; j <= m; ++j)
        if (j != self) send(j, MsgType::partial_sum, enc(s));
      return;
    }
    case 2: {
      ModReal total = partial_;
      for (PartyId j = 1; j <= m; ++j) {
        if (j == self) continue;
        auto in = inbox.take(j, MsgType::partial_sum);
        const ModReal s = in.mod_real(m);
        in.expect_end();
        record(ViewKind::received, detail::idx("S", j), enc(s), proj(s));
        total += s;
      }
      // The sum is at most m; m itself aliases to 0 and only occurs when every
      // input is exactly 1.
      Fixed value = Fixed::from_raw(total.raw());
      if (total.raw() == 0 && x_.raw() != 0) value = Fixed::from_integer(m);
      record(ViewKind::output, "s", enc(total), value.to_double());
      finish({ProtocolId::secure_sum, value, Exactness::exact});
      return;
    }
  }
}

}  // namespace riskagg
