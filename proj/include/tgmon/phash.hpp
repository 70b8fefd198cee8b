#pragma once

// 64-bit DCT perceptual hash.
//
//   1. grayscale (luma), 2. corner-aligned bilinear resize to 32x32,
//   3. orthonormal 2-D DCT-II, 4. keep the low-frequency 8x8 block,
//   5. mean of its 63 AC coefficients, 6. bit i set iff coefficient i > mean.
//
// Bits are assigned row-major over the block (row = vertical frequency),
// coefficient 0 in the most significant bit. The DC coefficient takes no
// part in the mean or the comparison, so its bit is always 0; constant
// images therefore hash to 0.

#include <array>
#include <bit>
#include <cmath>
#include <compare>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "tgmon/hex.hpp"
#include "tgmon/image.hpp"

namespace tgmon {

struct PHash64 {
  std::uint64_t bits = 0;

  std::string hex() const { return to_hex(bits); }

  static std::optional<PHash64> from_hex(std::string_view s) {
    if (!is_lower_hex(s, 16)) return std::nullopt;
    std::uint64_t v = 0;
    for (char c : s) v = (v << 4) | static_cast<std::uint64_t>(detail::hex_value(c));
    return PHash64{v};
  }

  friend auto operator<=>(const PHash64&, const PHash64&) = default;
};

inline int hamming(PHash64 a, PHash64 b) { return std::popcount(a.bits ^ b.bits); }

namespace detail {

inline constexpr int kHashSide = 32;
inline constexpr int kBlockSide = 8;

/// First kBlockSide rows of the orthonormal DCT-II basis for kHashSide points.
inline const std::array<std::array<double, kHashSide>, kBlockSide>& dct_rows() {
  static const auto rows = [] {
    std::array<std::array<double, kHashSide>, kBlockSide> m{};
    const double n = kHashSide;
    for (int k = 0; k < kBlockSide; ++k) {
      const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      for (int i = 0; i < kHashSide; ++i) {
        m[k][i] = scale * std::cos(std::numbers::pi * (2 * i + 1) * k / (2.0 * n));
      }
    }
    return m;
  }();
  return rows;
}

}  // namespace detail

/// Low-frequency 8x8 DCT block of a 32x32 grid, row-major.
inline std::array<double, 64> low_frequency_dct(const GrayImage& grid) {
  using namespace detail;
  const auto& c = dct_rows();
  // Shifting every sample by a constant leaves the AC terms unchanged and
  // makes a flat grid exactly zero.
  const double offset = grid.at(0, 0);

  std::array<std::array<double, kHashSide>, kBlockSide> partial{};  // C8 * X
  for (int u = 0; u < kBlockSide; ++u) {
    for (int x = 0; x < kHashSide; ++x) {
      double s = 0.0;
      for (int y = 0; y < kHashSide; ++y) s += c[u][y] * (grid.at(x, y) - offset);
      partial[u][x] = s;
    }
  }
  std::array<double, 64> block{};
  for (int u = 0; u < kBlockSide; ++u) {
    for (int v = 0; v < kBlockSide; ++v) {
      double s = 0.0;
      for (int x = 0; x < kHashSide; ++x) s += partial[u][x] * c[v][x];
      block[u * kBlockSide + v] = s;
    }
  }
  return block;
}

inline PHash64 phash64(const GrayImage& gray) {
  GrayImage grid = resize_bilinear(gray, detail::kHashSide, detail::kHashSide);
  auto block = low_frequency_dct(grid);
  double sum = 0.0;
  for (int i = 1; i < 64; ++i) sum += block[i];
  const double mean = sum / 63.0;
  std::uint64_t bits = 0;
  for (int i = 1; i < 64; ++i) {
    if (block[i] > mean) bits |= std::uint64_t{1} << (63 - i);
  }
  return PHash64{bits};
}

inline PHash64 phash64(const Image& img) { return phash64(to_grayscale(img)); }

}  // namespace tgmon
