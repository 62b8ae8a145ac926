#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <string>

#include "kgalign/error.hpp"

namespace kgalign {

/// Non-negative exact fraction, always stored in lowest terms.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::uint64_t num, std::uint64_t den) : num_(num), den_(den) {
    if (den_ == 0) throw Error(ErrorKind::ValueError, "zero denominator");
    normalize();
  }

  std::uint64_t num() const noexcept { return num_; }
  std::uint64_t den() const noexcept { return den_; }
  double to_double() const noexcept {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }
  bool is_zero() const noexcept { return num_ == 0; }

  friend Rational operator*(Rational a, Rational b) {
    // Cross-reduce first so the products stay within 64 bits for any counts
    // that fit in 32 bits.
    const std::uint64_t g1 = a.num_ == 0 ? 1 : std::gcd(a.num_, b.den_);
    const std::uint64_t g2 = b.num_ == 0 ? 1 : std::gcd(b.num_, a.den_);
    return Rational((a.num_ / g1) * (b.num_ / g2), (a.den_ / g2) * (b.den_ / g1));
  }

  friend bool operator==(const Rational&, const Rational&) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    const auto lhs = static_cast<unsigned __int128>(a.num_) * b.den_;
    const auto rhs = static_cast<unsigned __int128>(b.num_) * a.den_;
    return lhs <=> rhs;
  }

  std::string to_string() const {
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

 private:
  void normalize() {
    if (num_ == 0) {
      den_ = 1;
      return;
    }
    const std::uint64_t g = std::gcd(num_, den_);
    num_ /= g;
    den_ /= g;
  }

  std::uint64_t num_ = 0;
  std::uint64_t den_ = 1;
};

}  // namespace kgalign
