#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "tgmon/hex.hpp"
#include "tgmon/md5.hpp"

namespace tgmon {

/// 128-bit content checksum (MD5 digest).
struct Checksum128 {
  std::array<std::uint8_t, 16> bytes{};

  std::string hex() const { return to_hex(bytes); }

  static std::optional<Checksum128> from_hex(std::string_view s) {
    if (!is_lower_hex(s, 32)) return std::nullopt;
    auto raw = tgmon::from_hex(s);
    Checksum128 out;
    std::copy(raw->begin(), raw->end(), out.bytes.begin());
    return out;
  }

  friend auto operator<=>(const Checksum128&, const Checksum128&) = default;
};

inline Checksum128 checksum128(std::span<const std::uint8_t> payload) {
  return Checksum128{md5_digest(payload)};
}

inline Checksum128 checksum128(std::string_view payload) {
  return Checksum128{md5_digest(payload)};
}

}  // namespace tgmon
