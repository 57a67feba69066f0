// Copyright 2026 The fcache Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

namespace fcache::gf256 {

/// Reduction polynomial x^8 + x^4 + x^3 + x^2 + 1.
inline constexpr unsigned kPolynomial = 0x11D;

namespace detail {

struct Tables {
  std::array<std::uint8_t, 512> exp{};
  std::array<int, 256> log{};

  constexpr Tables() {
    unsigned x = 1;
    for (int i = 0; i < 255; ++i) {
      exp[i] = static_cast<std::uint8_t>(x);
      log[x] = i;
      x <<= 1;
      if (x & 0x100) x ^= kPolynomial;
    }
    for (int i = 255; i < 512; ++i) exp[i] = exp[i - 255];
    log[0] = -1;
  }
};

inline constexpr Tables kTables{};

}  // namespace detail

constexpr std::uint8_t add(std::uint8_t a, std::uint8_t b) { return a ^ b; }

constexpr std::uint8_t mul(std::uint8_t a, std::uint8_t b) {
  if (a == 0 || b == 0) return 0;
  return detail::kTables.exp[detail::kTables.log[a] + detail::kTables.log[b]];
}

constexpr std::uint8_t inv(std::uint8_t a) {
  if (a == 0) throw std::domain_error("GF(256): zero has no inverse");
  return detail::kTables.exp[255 - detail::kTables.log[a]];
}

constexpr std::uint8_t div(std::uint8_t a, std::uint8_t b) { return mul(a, inv(b)); }

constexpr std::uint8_t pow(std::uint8_t a, unsigned e) {
  std::uint8_t r = 1;
  for (unsigned i = 0; i < e; ++i) r = mul(r, a);
  return r;
}

/// A strong wrapper for code that wants operator syntax.
struct Element {
  std::uint8_t value = 0;

  friend constexpr Element operator+(Element a, Element b) { return {add(a.value, b.value)}; }
  friend constexpr Element operator-(Element a, Element b) { return {add(a.value, b.value)}; }
  friend constexpr Element operator*(Element a, Element b) { return {mul(a.value, b.value)}; }
  friend constexpr Element operator/(Element a, Element b) { return {div(a.value, b.value)}; }
  friend constexpr bool operator==(Element, Element) = default;
};

}  // namespace fcache::gf256
