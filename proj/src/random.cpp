#include "riskagg/random.hpp"

#include <cstring>
#include <stdexcept>
#include <vector>

#include <sodium.h>

namespace riskagg {
namespace {

void ensure_sodium() {
  static const int status = sodium_init();
  if (status < 0) throw Error("libsodium initialisation failed");
}

void put_le64(std::uint8_t* out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

// domain || 0x00 || le64(a) || le64(b)
std::vector<std::uint8_t> tagged(std::string_view domain, std::uint64_t a, std::uint64_t b) {
  std::vector<std::uint8_t> out(domain.begin(), domain.end());
  out.push_back(0);
  const std::size_t at = out.size();
  out.resize(at + 16);
  put_le64(out.data() + at, a);
  put_le64(out.data() + at + 8, b);
  return out;
}

}  // namespace

ChaChaStream::ChaChaStream(const std::array<std::uint8_t, 32>& key) : key_(key) {
  ensure_sodium();
}

ChaChaStream ChaChaStream::derive(std::uint64_t master_seed, std::uint64_t stream_id,
                                  std::string_view domain) {
  ensure_sodium();
  const auto material = tagged(domain, master_seed, stream_id);
  std::array<std::uint8_t, 32> key{};
  crypto_generichash(key.data(), key.size(), material.data(), material.size(), nullptr, 0);
  return ChaChaStream(key);
}

void ChaChaStream::refill() {
  static const std::array<std::uint8_t, crypto_stream_chacha20_NONCEBYTES> kNonce{};
  block_.fill(0);
  // 64-byte ChaCha blocks; counter_ counts blocks already consumed.
  crypto_stream_chacha20_xor_ic(block_.data(), block_.data(), block_.size(), kNonce.data(),
                                counter_, key_.data());
  counter_ += block_.size() / 64;
  pos_ = 0;
}

std::uint64_t ChaChaStream::next_u64() {
  if (pos_ + 8 > block_.size()) refill();
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | block_[pos_ + i];
  pos_ += 8;
  return v;
}

OsEntropy::OsEntropy() { ensure_sodium(); }

std::uint64_t OsEntropy::next_u64() {
  std::uint64_t v = 0;
  randombytes_buf(&v, sizeof v);
  return v;
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label, std::uint64_t index) {
  ensure_sodium();
  const auto material = tagged(label, master_seed, index);
  std::array<std::uint8_t, 16> out{};
  crypto_generichash(out.data(), out.size(), material.data(), material.size(), nullptr, 0);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | out[i];
  return v;
}

std::array<std::uint8_t, 32> hash256(std::span<const std::uint8_t> data) {
  ensure_sodium();
  std::array<std::uint8_t, 32> out{};
  crypto_generichash(out.data(), out.size(), data.data(), data.size(), nullptr, 0);
  return out;
}

}  // namespace riskagg
