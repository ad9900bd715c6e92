#pragma once

#include <array>
#include <concepts>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>

#include "riskagg/arith.hpp"

namespace riskagg {

/// Stream of uniformly random 64-bit words. Each party owns exactly one.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual std::uint64_t next_u64() = 0;

  void fill(std::span<std::uint8_t> out) {
    std::size_t i = 0;
    while (i < out.size()) {
      std::uint64_t w = next_u64();
      for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
        out[i] = static_cast<std::uint8_t>(w);
        w >>= 8;
      }
    }
  }
};

/// Deterministic ChaCha20 keystream. The key is derived from a master seed and
/// a stream id so every party in a seeded session gets an independent stream.
class ChaChaStream final : public RandomSource {
 public:
  explicit ChaChaStream(const std::array<std::uint8_t, 32>& key);

  static ChaChaStream derive(std::uint64_t master_seed, std::uint64_t stream_id,
                             std::string_view domain = "riskagg/party");

  std::uint64_t next_u64() override;

 private:
  void refill();

  std::array<std::uint8_t, 32> key_;
  std::array<std::uint8_t, 512> block_{};
  std::uint64_t counter_ = 0;
  std::size_t pos_ = 512;
};

/// Operating-system entropy; used when no seed is configured.
class OsEntropy final : public RandomSource {
 public:
  OsEntropy();
  std::uint64_t next_u64() override;
};

/// Child seed for the index-th sub-session of a seeded run.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label, std::uint64_t index);

/// 32-byte BLAKE2b digest.
std::array<std::uint8_t, 32> hash256(std::span<const std::uint8_t> data);

// ---------------------------------------------------------------------------
// Uniform sampling by rejection; all draws are exact on their lattice.

inline std::uint64_t uniform_below(RandomSource& rng, std::uint64_t bound) {
  if (bound == 0) throw RangeError("uniform_below: empty range");
  if (bound == 1) return 0;
  const int bits = 64 - std::countl_zero(bound - 1);
  const std::uint64_t mask = bits == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
  for (;;) {
    const std::uint64_t v = rng.next_u64() & mask;
    if (v < bound) return v;
  }
}

template <std::signed_integral I>
std::uint64_t uniform_below(RandomSource& rng, I bound) {
  if (bound <= 0) throw RangeError("uniform_below: empty range");
  return uniform_below(rng, static_cast<std::uint64_t>(bound));
}

inline u128 uniform_below(RandomSource& rng, u128 bound) {
  if (bound == 0) throw RangeError("uniform_below: empty range");
  const auto hi_bound = static_cast<std::uint64_t>(bound >> 64);
  if (hi_bound == 0) return uniform_below(rng, static_cast<std::uint64_t>(bound));
  const int hi_bits = 64 - std::countl_zero(static_cast<std::uint64_t>((bound - 1) >> 64));
  const std::uint64_t hi_mask =
      hi_bits == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << hi_bits) - 1;
  for (;;) {
    const std::uint64_t lo = rng.next_u64();
    const std::uint64_t hi = rng.next_u64() & hi_mask;
    const u128 v = (u128{hi} << 64) | lo;
    if (v < bound) return v;
  }
}

inline u256 uniform_below(RandomSource& rng, const u256& bound) {
  if (bound == 0) throw RangeError("uniform_below: empty range");
  const unsigned bits = static_cast<unsigned>(boost::multiprecision::msb(u256(bound - 1))) + 1;
  const u256 mask = bits >= 256 ? ~u256(0) : (u256(1) << bits) - 1;
  const unsigned words = (bits + 63) / 64;
  for (;;) {
    u256 v = 0;
    for (unsigned w = 0; w < words; ++w) v |= u256(rng.next_u64()) << (64 * w);
    v &= mask;
    if (v < bound) return v;
  }
}

/// Uniform element of the mod-m lattice whose raw value is a multiple of
/// 2^coarse_bits (coarse_bits = 0 gives the full lattice).
template <class ModT>
ModT uniform_mod(RandomSource& rng, std::uint64_t modulus, unsigned coarse_bits = 0) {
  using Raw = typename ModT::raw_type;
  const Raw span = ModT::zero(modulus).span();
  const Raw steps = span >> coarse_bits;
  const Raw r = uniform_below(rng, steps);
  return ModT::from_raw(r << coarse_bits, modulus);
}

inline FieldElem uniform_field(RandomSource& rng, std::uint64_t p) {
  return FieldElem(uniform_below(rng, p), p);
}

}  // namespace riskagg
