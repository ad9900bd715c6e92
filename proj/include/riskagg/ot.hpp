#pragma once

// RSA-based 1-out-of-k oblivious transfer over Z_D.
//
// Message flow for one transfer (sender holds b_0..b_{k-1}, receiver index i):
//   1. sender   -> receiver  x_0..x_{k-1}, uniform in Z_N
//   2. receiver -> sender    c = x_i + r^e mod N, r uniform in Z_N
//   3. sender   -> receiver  a_j = b_j + mask(k_j) mod D, k_j = (c - x_j)^d mod N
//   4. receiver              b_i = a_i - mask(r) mod D
//
// mask() reduces the recovered RSA value into Z_D. In OtMode::raw it is a plain
// reduction; OtMode::padded hashes the value first. Raw RSA without padding is
// not secure against real adversaries; treat this as a research artifact.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <gmpxx.h>

#include "riskagg/random.hpp"
#include "riskagg/wire.hpp"

namespace riskagg {

struct RsaPublicKey {
  mpz_class n;
  mpz_class e;
};

struct RsaKeyPair {
  mpz_class n, e, d;
  // CRT components
  mpz_class p, q, dp, dq, qinv;

  static RsaKeyPair from_primes(const mpz_class& p, const mpz_class& q, unsigned long e);

  RsaPublicKey public_key() const { return {n, e}; }
  mpz_class encrypt(const mpz_class& m) const;
  mpz_class decrypt(const mpz_class& c) const;
  std::size_t bits() const { return mpz_sizeinbase(n.get_mpz_t(), 2); }
};

inline constexpr unsigned kMinRsaBits = 64;
inline constexpr unsigned kDefaultRsaBits = 2048;

/// Generates a keypair whose modulus has exactly `bits` bits. Keys under 1024
/// bits are accepted for tests and emit a one-time warning on stderr.
RsaKeyPair rsa_keygen(unsigned bits, RandomSource& rng, unsigned long e = 65537);

/// Uniform integer in [0, bound).
mpz_class uniform_below(RandomSource& rng, const mpz_class& bound);

void write_bigint(ByteWriter& w, const mpz_class& v);
mpz_class read_bigint(ByteReader& r);

enum class OtMode : std::uint8_t { raw = 0, padded = 1 };

class OtSender {
 public:
  OtSender(std::shared_ptr<const RsaKeyPair> key, std::vector<std::uint64_t> branches,
           std::uint64_t domain, OtMode mode = OtMode::raw);

  /// Step 1: random offsets x_0..x_{k-1}.
  const std::vector<mpz_class>& offer(RandomSource& rng);

  /// Step 3: masked branches a_0..a_{k-1}.
  std::vector<std::uint64_t> respond(const mpz_class& c);

  std::size_t branch_count() const { return branches_.size(); }

 private:
  std::shared_ptr<const RsaKeyPair> key_;
  std::vector<std::uint64_t> branches_;
  std::uint64_t domain_;
  OtMode mode_;
  int step_ = 0;
  std::vector<mpz_class> offsets_;
};

class OtReceiver {
 public:
  OtReceiver(RsaPublicKey key, std::size_t branch_count, std::size_t choice, std::uint64_t domain,
             OtMode mode = OtMode::raw);

  /// Step 2: blinded choice c.
  mpz_class choose(std::span<const mpz_class> offsets, RandomSource& rng);

  /// Step 4: the chosen branch.
  std::uint64_t finish(std::span<const std::uint64_t> masked);

  /// Unmasks a branch other than the chosen one with the receiver's key. Used
  /// by tests to check that the wrong branch looks uniform.
  std::uint64_t unmask_other(std::span<const std::uint64_t> masked, std::size_t index) const;

 private:
  RsaPublicKey key_;
  std::size_t branch_count_;
  std::size_t choice_;
  std::uint64_t domain_;
  OtMode mode_;
  int step_ = 0;
  mpz_class blind_;
};

/// Reduction of a recovered RSA value into Z_domain.
std::uint64_t ot_mask(const mpz_class& value, const mpz_class& modulus, std::uint64_t domain,
                      OtMode mode);

/// Runs all four steps in-process. Returns the receiver's output.
std::uint64_t ot_transfer(std::shared_ptr<const RsaKeyPair> key,
                          std::span<const std::uint64_t> branches, std::size_t choice,
                          std::uint64_t domain, RandomSource& sender_rng,
                          RandomSource& receiver_rng, OtMode mode = OtMode::raw);

/// 1-out-of-2 specialisation.
inline std::uint64_t ot2(std::shared_ptr<const RsaKeyPair> key, std::uint64_t b0,
                         std::uint64_t b1, std::size_t choice, std::uint64_t domain,
                         RandomSource& sender_rng, RandomSource& receiver_rng,
                         OtMode mode = OtMode::raw) {
  const std::uint64_t branches[2] = {b0, b1};
  return ot_transfer(std::move(key), branches, choice, domain, sender_rng, receiver_rng, mode);
}

}  // namespace riskagg
