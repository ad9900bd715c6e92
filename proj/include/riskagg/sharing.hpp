#pragma once

// Additive secret sharing over F_p and over the mod-m real lattice, and the
// degree-2 polynomial sharing used by the real-valued inner product.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "riskagg/arith.hpp"
#include "riskagg/random.hpp"

namespace riskagg {

namespace detail {

template <class T>
struct Carrier;

template <>
struct Carrier<FieldElem> {
  static FieldElem uniform(RandomSource& rng, std::uint64_t p) { return uniform_field(rng, p); }
};

template <class Raw, unsigned F>
struct Carrier<BasicModReal<Raw, F>> {
  static BasicModReal<Raw, F> uniform(RandomSource& rng, std::uint64_t m) {
    return uniform_mod<BasicModReal<Raw, F>>(rng, m);
  }
};

}  // namespace detail

/// k >= 2 additive shares of one secret. Share j (0-based) goes to the party
/// with the same index in the routing table of the protocol using it.
template <class T>
class ShareSet {
 public:
  ShareSet() = default;
  explicit ShareSet(std::vector<T> shares) : shares_(std::move(shares)) {}

  std::size_t size() const { return shares_.size(); }
  const T& operator[](std::size_t i) const { return shares_[i]; }
  std::span<const T> shares() const { return shares_; }

 private:
  std::vector<T> shares_;
};

/// Splits x into k shares: k-1 independent uniform draws, last one fixed so
/// the shares sum to x.
template <class T>
ShareSet<T> additive_split(const T& x, std::size_t k, RandomSource& rng) {
  if (k < 2) throw ArithmeticError("additive_split needs at least 2 shares");
  std::vector<T> shares;
  shares.reserve(k);
  T rest = x;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    shares.push_back(detail::Carrier<T>::uniform(rng, x.modulus()));
    rest -= shares.back();
  }
  shares.push_back(rest);
  return ShareSet<T>(std::move(shares));
}

template <class T>
T reconstruct(std::span<const T> shares) {
  if (shares.size() < 2) throw ArithmeticError("reconstruct needs at least 2 shares");
  T acc = shares[0];
  for (std::size_t i = 1; i < shares.size(); ++i) {
    if (shares[i].modulus() != acc.modulus()) throw ArithmeticError("shares use mixed moduli");
    acc += shares[i];
  }
  return acc;
}

template <class T>
T reconstruct(const ShareSet<T>& s) {
  return reconstruct<T>(s.shares());
}

// ---------------------------------------------------------------------------
// Degree-2 polynomial sharing at t = (1/4, 1/2, 3/4).
//
// Evaluation points are quarters, so they are stored as numerators over 4.
// A slope on the 2^-(F-2) lattice (raw divisible by 4) times t_j stays on the
// carrier lattice exactly; a quadratic coefficient needs raw divisible by 16.

inline constexpr std::array<unsigned, 3> kEvalQuarters{1, 2, 3};

/// Lagrange weights at t = 0 for the nodes above: L_j(0) = 3, -3, 1.
inline constexpr std::array<int, 3> kLagrangeAtZero{3, -3, 1};

struct PolyShare {
  std::array<ModReal, 3> values;
};

namespace detail {

template <class ModT>
ModT times_fraction(const ModT& a, unsigned numerator, unsigned log2_den) {
  const auto den = typename ModT::raw_type(1) << log2_den;
  if (a.raw() % den != 0) throw RangeError("coefficient is not on the coarse evaluation lattice");
  return ModT::from_raw(a.raw() >> log2_den, a.modulus()).scaled(numerator);
}

}  // namespace detail

/// Evaluations x + a*t_j mod tau for a given slope a (raw divisible by 4).
inline PolyShare poly_share_with_slope(const ModReal& x, const ModReal& slope) {
  if (x.modulus() != slope.modulus()) throw ArithmeticError("mod-real modulus mismatch");
  PolyShare out;
  for (std::size_t j = 0; j < 3; ++j)
    out.values[j] = x + detail::times_fraction(slope, kEvalQuarters[j], 2);
  return out;
}

/// Random line through (0, x): slope uniform on [0, tau) at 2^-62 resolution.
inline PolyShare poly_share(const ModReal& x, RandomSource& rng) {
  return poly_share_with_slope(x, uniform_mod<ModReal>(rng, x.modulus(), 2));
}

/// Z(t_k) = alpha*t_k + beta*t_k^2 mod tau for k = 1..3. Vanishes at t = 0.
template <class ModT>
std::array<ModT, 3> mask_poly(const ModT& alpha, const ModT& beta) {
  if (alpha.modulus() != beta.modulus()) throw ArithmeticError("mod-real modulus mismatch");
  std::array<ModT, 3> out;
  for (std::size_t k = 0; k < 3; ++k) {
    const unsigned t = kEvalQuarters[k];
    out[k] = detail::times_fraction(alpha, t, 2) + detail::times_fraction(beta, t * t, 4);
  }
  return out;
}

/// Value at t = 0 of the degree-<=2 polynomial through the three evaluations.
/// The weights are integers, so the combination commutes with reduction mod tau.
template <class ModT>
ModT lagrange_at_zero(const ModT& v1, const ModT& v2, const ModT& v3) {
  return v1.scaled(3) - v2.scaled(3) + v3;
}

}  // namespace riskagg
