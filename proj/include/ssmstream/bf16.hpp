#pragma once

#include <bit>
#include <cstdint>

namespace ssmstream {

// Upper half of an IEEE-754 binary32 pattern.
struct BF16Scalar {
  std::uint16_t bits = 0;
  friend bool operator==(BF16Scalar, BF16Scalar) = default;
};

// Round-to-nearest-even on the dropped 16 bits. NaNs keep sign and payload
// high bits; a payload that would vanish is replaced by the quiet bit so the
// value stays a NaN.
inline BF16Scalar bf16_narrow(float x) noexcept {
  std::uint32_t u = std::bit_cast<std::uint32_t>(x);
  if ((u & 0x7FFFFFFFu) > 0x7F800000u) {
    auto hi = static_cast<std::uint16_t>(u >> 16);
    if ((hi & 0x007Fu) == 0) hi |= 0x0040u;
    return {hi};
  }
  u += 0x7FFFu + ((u >> 16) & 1u);
  return {static_cast<std::uint16_t>(u >> 16)};
}

inline float bf16_widen(BF16Scalar b) noexcept {
  return std::bit_cast<float>(static_cast<std::uint32_t>(b.bits) << 16);
}

inline float bf16_round(float x) noexcept { return bf16_widen(bf16_narrow(x)); }

}  // namespace ssmstream
