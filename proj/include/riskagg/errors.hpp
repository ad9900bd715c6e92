#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace riskagg {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value falls outside the range an operation accepts (fixed-point overflow,
/// out-of-domain input, bad quantization code).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Operands of an arithmetic operation disagree (different moduli, inverse of
/// zero, malformed share set).
class ArithmeticError : public Error {
 public:
  using Error::Error;
};

/// Session parameters rejected before any message is sent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A protocol run was aborted. Carries the party and round where it happened
/// when known (0 otherwise).
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::uint16_t party = 0,
                std::uint16_t round = 0)
      : Error(decorate(what, party, round)), party_(party), round_(round) {}

  std::uint16_t party() const noexcept { return party_; }
  std::uint16_t round() const noexcept { return round_; }

 private:
  static std::string decorate(const std::string& what, std::uint16_t party,
                              std::uint16_t round) {
    std::string out = what;
    if (party != 0) out += " [party " + std::to_string(party);
    if (party != 0 && round != 0) out += ", round " + std::to_string(round);
    if (party != 0) out += "]";
    return out;
  }

  std::uint16_t party_;
  std::uint16_t round_;
};

/// A peer did not complete a round before the deadline.
class TimeoutError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

/// Bytes on the wire do not form a valid frame or payload.
class WireError : public Error {
 public:
  using Error::Error;
};

/// Transcript replay diverged from the recorded log.
class VerificationError : public Error {
 public:
  VerificationError(const std::string& what, std::size_t index)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace riskagg
