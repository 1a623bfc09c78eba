#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include "ssmstream/bf16.hpp"

using namespace ssmstream;

namespace {

float from_bits(std::uint32_t u) { return std::bit_cast<float>(u); }

// Nearest of the two bracketing BF16 values, ties to the even pattern,
// decided by exact double arithmetic.
std::uint16_t nearest_even(std::uint32_t u) {
  const std::uint16_t lo = static_cast<std::uint16_t>(u >> 16);
  if ((u & 0xFFFFu) == 0) return lo;
  const std::uint16_t hi = static_cast<std::uint16_t>(lo + 1);
  auto value = [](std::uint16_t b) {
    if ((b & 0x7FFFu) == 0x7F80u) return std::copysign(std::ldexp(1.0, 128), (b & 0x8000u) ? -1.0 : 1.0);
    return static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(b) << 16));
  };
  const double x = from_bits(u);
  const double dl = std::abs(x - value(lo)), dh = std::abs(x - value(hi));
  if (dl < dh) return lo;
  if (dh < dl) return hi;
  return (lo & 1u) ? hi : lo;
}

}  // namespace

TEST(Bf16, One) {
  EXPECT_EQ(bf16_narrow(1.0f).bits, 0x3F80);
  EXPECT_EQ(bf16_widen({0x3F80}), 1.0f);
}

TEST(Bf16, JustAboveOneRoundsDown) { EXPECT_EQ(bf16_narrow(from_bits(0x3F800001u)).bits, 0x3F80); }

TEST(Bf16, TieRoundsToEven) {
  EXPECT_EQ(bf16_narrow(from_bits(0x3F808000u)).bits, 0x3F80);
  EXPECT_EQ(bf16_narrow(from_bits(0x3F818000u)).bits, 0x3F82);
}

TEST(Bf16, SpecialValues) {
  EXPECT_EQ(bf16_narrow(std::numeric_limits<float>::infinity()).bits, 0x7F80);
  EXPECT_EQ(bf16_narrow(-std::numeric_limits<float>::infinity()).bits, 0xFF80);
  EXPECT_EQ(bf16_narrow(-0.0f).bits, 0x8000);
  EXPECT_TRUE(std::isnan(bf16_round(std::numeric_limits<float>::quiet_NaN())));
  EXPECT_TRUE(std::isnan(bf16_widen(bf16_narrow(from_bits(0x7F800001u)))));  // payload only in low bits
  EXPECT_TRUE(std::isnan(bf16_widen(bf16_narrow(from_bits(0xFF800001u)))));
  EXPECT_EQ(bf16_narrow(std::numeric_limits<float>::max()).bits, 0x7F80);  // overflows to inf
}

TEST(Bf16, WidenNarrowIsIdentityOnAllPatterns) {
  for (std::uint32_t b = 0; b <= 0xFFFFu; ++b) {
    const BF16Scalar x{static_cast<std::uint16_t>(b)};
    EXPECT_EQ(bf16_narrow(bf16_widen(x)), x) << std::hex << b;
  }
}

TEST(Bf16, MatchesNearestEvenOracle) {
  const std::uint32_t lows[] = {0x0000, 0x0001, 0x3FFF, 0x7FFF, 0x8000, 0x8001, 0xBFFF, 0xFFFF};
  std::mt19937 rng(5);
  for (std::uint32_t hi = 0; hi <= 0xFFFFu; ++hi) {
    if ((hi & 0x7F80u) == 0x7F80u) continue;  // inf/NaN exponent
    for (std::uint32_t lo : lows) {
      const std::uint32_t u = (hi << 16) | lo;
      ASSERT_EQ(bf16_narrow(from_bits(u)).bits, nearest_even(u)) << std::hex << u;
    }
    const std::uint32_t u = (hi << 16) | (rng() & 0xFFFFu);
    ASSERT_EQ(bf16_narrow(from_bits(u)).bits, nearest_even(u)) << std::hex << u;
  }
}

TEST(Bf16, RelativeErrorBound) {
  std::mt19937 rng(6);
  for (int i = 0; i < 2000000; ++i) {
    const std::uint32_t u = rng();
    const float x = from_bits(u);
    if (!std::isnormal(x)) continue;
    const float y = bf16_round(x);
    if (!std::isfinite(y)) continue;
    ASSERT_LE(std::abs(static_cast<double>(y) - x) / std::abs(static_cast<double>(x)), std::ldexp(1.0, -8));
  }
}
