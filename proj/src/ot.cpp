#include "riskagg/ot.hpp"

#include <iostream>
#include <mutex>

namespace riskagg {
namespace {

mpz_class powm(const mpz_class& base, const mpz_class& exp, const mpz_class& mod) {
  mpz_class out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return out;
}

mpz_class mod_pos(const mpz_class& a, const mpz_class& m) {
  mpz_class r;
  mpz_mod(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t());
  return r;
}

Bytes export_be(const mpz_class& v, std::size_t min_len = 0) {
  std::size_t count = 0;
  Bytes raw((mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8);
  mpz_export(raw.data(), &count, 1, 1, 1, 0, v.get_mpz_t());
  raw.resize(count);
  if (raw.size() < min_len) raw.insert(raw.begin(), min_len - raw.size(), 0);
  return raw;
}

// Random odd integer with exactly `bits` bits and the two top bits set.
mpz_class random_prime(unsigned bits, RandomSource& rng, unsigned long e) {
  for (int attempt = 0; attempt < 4096; ++attempt) {
    mpz_class candidate = uniform_below(rng, mpz_class(1) << bits);
    mpz_setbit(candidate.get_mpz_t(), bits - 1);
    mpz_setbit(candidate.get_mpz_t(), bits - 2);
    mpz_setbit(candidate.get_mpz_t(), 0);
    mpz_nextprime(candidate.get_mpz_t(), candidate.get_mpz_t());
    if (mpz_sizeinbase(candidate.get_mpz_t(), 2) != bits) continue;
    mpz_class g;
    const mpz_class pm1 = candidate - 1;
    const mpz_class ee(e);
    mpz_gcd(g.get_mpz_t(), pm1.get_mpz_t(), ee.get_mpz_t());
    if (g == 1) return candidate;
  }
  throw Error("RSA prime generation gave up after 4096 candidates");
}

void warn_small_key(unsigned bits) {
  static std::once_flag once;
  std::call_once(once, [bits] {
    std::cerr << "riskagg: warning: generating " << bits
              << "-bit RSA keys; use >= 2048 bits outside tests\n";
  });
}

}  // namespace

RsaKeyPair RsaKeyPair::from_primes(const mpz_class& p, const mpz_class& q, unsigned long e) {
  RsaKeyPair k;
  k.p = p;
  k.q = q;
  k.n = p * q;
  k.e = e;
  const mpz_class phi = (p - 1) * (q - 1);
  if (mpz_invert(k.d.get_mpz_t(), k.e.get_mpz_t(), phi.get_mpz_t()) == 0)
    throw ConfigError("RSA exponent is not invertible modulo phi(n)");
  k.dp = mod_pos(k.d, p - 1);
  k.dq = mod_pos(k.d, q - 1);
  if (mpz_invert(k.qinv.get_mpz_t(), q.get_mpz_t(), p.get_mpz_t()) == 0)
    throw ConfigError("RSA primes must be distinct");
  return k;
}

mpz_class RsaKeyPair::encrypt(const mpz_class& m) const { return powm(m, e, n); }

mpz_class RsaKeyPair::decrypt(const mpz_class& c) const {
  const mpz_class m1 = powm(c, dp, p);
  const mpz_class m2 = powm(c, dq, q);
  const mpz_class h = mod_pos(qinv * (m1 - m2), p);
  return m2 + h * q;
}

RsaKeyPair rsa_keygen(unsigned bits, RandomSource& rng, unsigned long e) {
  if (bits < kMinRsaBits) throw ConfigError("RSA key size must be >= 64 bits");
  if (bits < 1024) warn_small_key(bits);
  const unsigned pbits = (bits + 1) / 2;
  const unsigned qbits = bits - pbits;
  for (;;) {
    const mpz_class p = random_prime(pbits, rng, e);
    const mpz_class q = random_prime(qbits, rng, e);
    if (p == q) continue;
    RsaKeyPair k = RsaKeyPair::from_primes(p, q, e);
    if (k.bits() == bits) return k;
  }
}

mpz_class uniform_below(RandomSource& rng, const mpz_class& bound) {
  if (bound <= 0) throw RangeError("uniform_below: empty range");
  const mpz_class top = bound - 1;
  const std::size_t bits = top == 0 ? 0 : mpz_sizeinbase(top.get_mpz_t(), 2);
  if (bits == 0) return 0;
  const std::size_t words = (bits + 63) / 64;
  std::vector<std::uint64_t> limbs(words);
  for (;;) {
    for (auto& w : limbs) w = rng.next_u64();
    if (bits % 64 != 0) limbs.back() &= (std::uint64_t{1} << (bits % 64)) - 1;
    mpz_class v;
    mpz_import(v.get_mpz_t(), words, -1, sizeof(std::uint64_t), 0, 0, limbs.data());
    if (v < bound) return v;
  }
}

void write_bigint(ByteWriter& w, const mpz_class& v) {
  if (v < 0) throw RangeError("negative big integer on the wire");
  w.blob(export_be(v));
}

mpz_class read_bigint(ByteReader& r) {
  const auto bytes = r.blob();
  mpz_class v;
  if (!bytes.empty()) mpz_import(v.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  return v;
}

std::uint64_t ot_mask(const mpz_class& value, const mpz_class& modulus, std::uint64_t domain,
                      OtMode mode) {
  if (mode == OtMode::raw) return mpz_fdiv_ui(value.get_mpz_t(), domain);
  const Bytes bytes = export_be(value, (mpz_sizeinbase(modulus.get_mpz_t(), 2) + 7) / 8);
  const auto digest = hash256(bytes);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | digest[static_cast<std::size_t>(i)];
  return v % domain;
}

OtSender::OtSender(std::shared_ptr<const RsaKeyPair> key, std::vector<std::uint64_t> branches,
                   std::uint64_t domain, OtMode mode)
    : key_(std::move(key)), branches_(std::move(branches)), domain_(domain), mode_(mode) {
  if (branches_.size() < 2) throw RangeError("oblivious transfer needs at least 2 branches");
  if (domain_ == 0) throw RangeError("empty element domain");
  for (auto b : branches_)
    if (b >= domain_) throw RangeError("OT branch value outside the element domain");
}

const std::vector<mpz_class>& OtSender::offer(RandomSource& rng) {
  if (step_ != 0) throw ProtocolError("OT step-order violation: offer after step " + std::to_string(step_));
  offsets_.reserve(branches_.size());
  for (std::size_t j = 0; j < branches_.size(); ++j) offsets_.push_back(uniform_below(rng, key_->n));
  step_ = 1;
  return offsets_;
}

std::vector<std::uint64_t> OtSender::respond(const mpz_class& c) {
  if (step_ != 1) throw ProtocolError("OT step-order violation: respond before offer");
  if (c < 0 || c >= key_->n) throw RangeError("OT blinded choice outside Z_N");
  std::vector<std::uint64_t> out(branches_.size());
  for (std::size_t j = 0; j < branches_.size(); ++j) {
    const mpz_class kj = key_->decrypt(mod_pos(c - offsets_[j], key_->n));
    const std::uint64_t m = ot_mask(kj, key_->n, domain_, mode_);
    out[j] = static_cast<std::uint64_t>((u128{branches_[j]} + m) % domain_);
  }
  step_ = 2;
  offsets_.clear();
  return out;
}

OtReceiver::OtReceiver(RsaPublicKey key, std::size_t branch_count, std::size_t choice,
                       std::uint64_t domain, OtMode mode)
    : key_(std::move(key)), branch_count_(branch_count), choice_(choice), domain_(domain), mode_(mode) {
  if (branch_count_ < 2) throw RangeError("oblivious transfer needs at least 2 branches");
  if (choice_ >= branch_count_) throw RangeError("OT choice index out of branch range");
  if (domain_ == 0) throw RangeError("empty element domain");
}

mpz_class OtReceiver::choose(std::span<const mpz_class> offsets, RandomSource& rng) {
  if (step_ != 0) throw ProtocolError("OT step-order violation: choose called twice");
  if (offsets.size() != branch_count_) throw RangeError("OT offer has the wrong branch count");
  for (const auto& x : offsets)
    if (x < 0 || x >= key_.n) throw RangeError("OT offset outside Z_N");
  blind_ = uniform_below(rng, key_.n);
  step_ = 1;
  return mod_pos(offsets[choice_] + powm(blind_, key_.e, key_.n), key_.n);
}

std::uint64_t OtReceiver::finish(std::span<const std::uint64_t> masked) {
  if (step_ != 1) throw ProtocolError("OT step-order violation: finish before choose");
  if (masked.size() != branch_count_) throw RangeError("OT response has the wrong branch count");
  for (auto a : masked)
    if (a >= domain_) throw RangeError("OT response outside the element domain");
  step_ = 2;
  const std::uint64_t m = ot_mask(blind_, key_.n, domain_, mode_);
  return static_cast<std::uint64_t>((u128{masked[choice_]} + domain_ - m) % domain_);
}

std::uint64_t OtReceiver::unmask_other(std::span<const std::uint64_t> masked,
                                       std::size_t index) const {
  if (index >= masked.size()) throw RangeError("OT branch index out of range");
  const std::uint64_t m = ot_mask(blind_, key_.n, domain_, mode_);
  return static_cast<std::uint64_t>((u128{masked[index]} + domain_ - m) % domain_);
}

std::uint64_t ot_transfer(std::shared_ptr<const RsaKeyPair> key,
                          std::span<const std::uint64_t> branches, std::size_t choice,
                          std::uint64_t domain, RandomSource& sender_rng,
                          RandomSource& receiver_rng, OtMode mode) {
  const RsaPublicKey pub = key->public_key();
  OtSender sender(std::move(key), {branches.begin(), branches.end()}, domain, mode);
  OtReceiver receiver(pub, branches.size(), choice, domain, mode);
  const auto& offsets = sender.offer(sender_rng);
  const mpz_class c = receiver.choose(offsets, receiver_rng);
  const auto masked = sender.respond(c);
  return receiver.finish(masked);
}

}  // namespace riskagg
