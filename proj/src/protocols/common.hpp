#pragma once

// Encoding and projection helpers shared by the protocol implementations.

#include <string>

#include "riskagg/protocols.hpp"
#include "riskagg/sharing.hpp"

namespace riskagg::detail {

inline Bytes enc(const ModReal& v) {
  ByteWriter w;
  w.mod_real(v);
  return w.take();
}
inline Bytes enc(const WideModReal& v) {
  ByteWriter w;
  w.wide(v);
  return w.take();
}
inline Bytes enc(const FieldElem& v) {
  ByteWriter w;
  w.field(v);
  return w.take();
}
inline Bytes enc_u64(std::uint64_t v) {
  ByteWriter w;
  w.u64(v);
  return w.take();
}

inline double proj(const ModReal& v) { return v.to_double() / static_cast<double>(v.modulus()); }
inline double proj(const WideModReal& v) { return v.to_double() / static_cast<double>(v.modulus()); }
inline double proj(const FieldElem& v) {
  return static_cast<double>(v.value()) / static_cast<double>(v.modulus());
}
inline double proj(std::uint64_t v, std::uint64_t ring) {
  return static_cast<double>(v) / static_cast<double>(ring);
}

// label helpers: "x[3](1)", "R[1,2]"
inline std::string idx(std::string_view name, std::size_t i) {
  return std::string(name) + "[" + std::to_string(i) + "]";
}
inline std::string idx(std::string_view name, std::size_t i, std::size_t k) {
  return idx(name, i) + "(" + std::to_string(k) + ")";
}
inline std::string pair(std::string_view name, std::size_t a, std::size_t b) {
  return std::string(name) + "[" + std::to_string(a) + "," + std::to_string(b) + "]";
}

}  // namespace riskagg::detail
