#pragma once

// MD5 message digest (RFC 1321). Incremental; the one-shot helper is
// `md5_digest`.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>

namespace tgmon {

class Md5 {
 public:
  using Digest = std::array<std::uint8_t, 16>;

  Md5() = default;

  void update(std::span<const std::uint8_t> data) {
    std::size_t offset = static_cast<std::size_t>(length_ % 64);
    length_ += data.size();
    std::size_t i = 0;
    if (offset != 0) {
      std::size_t take = std::min<std::size_t>(64 - offset, data.size());
      std::memcpy(buffer_.data() + offset, data.data(), take);
      i = take;
      if (offset + take < 64) return;
      transform(buffer_.data());
    }
    for (; i + 64 <= data.size(); i += 64) transform(data.data() + i);
    if (i < data.size()) std::memcpy(buffer_.data(), data.data() + i, data.size() - i);
  }

  void update(std::string_view data) {
    update(std::span{reinterpret_cast<const std::uint8_t*>(data.data()), data.size()});
  }

  Digest finish() {
    std::uint64_t bit_length = length_ * 8;
    static constexpr std::uint8_t kPad[64] = {0x80};
    std::size_t offset = static_cast<std::size_t>(length_ % 64);
    std::size_t pad = offset < 56 ? 56 - offset : 120 - offset;
    update(std::span{kPad, pad});
    std::array<std::uint8_t, 8> tail{};
    for (int i = 0; i < 8; ++i) tail[i] = static_cast<std::uint8_t>(bit_length >> (8 * i));
    update(std::span<const std::uint8_t>{tail});

    Digest out{};
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) out[4 * i + j] = static_cast<std::uint8_t>(state_[i] >> (8 * j));
    }
    return out;
  }

 private:
  static constexpr std::uint32_t kK[64] = {
      0xd76aa478, 0xe8c7b756, 0x242070db, 0xc1bdceee, 0xf57c0faf, 0x4787c62a, 0xa8304613,
      0xfd469501, 0x698098d8, 0x8b44f7af, 0xffff5bb1, 0x895cd7be, 0x6b901122, 0xfd987193,
      0xa679438e, 0x49b40821, 0xf61e2562, 0xc040b340, 0x265e5a51, 0xe9b6c7aa, 0xd62f105d,
      0x02441453, 0xd8a1e681, 0xe7d3fbc8, 0x21e1cde6, 0xc33707d6, 0xf4d50d87, 0x455a14ed,
      0xa9e3e905, 0xfcefa3f8, 0x676f02d9, 0x8d2a4c8a, 0xfffa3942, 0x8771f681, 0x6d9d6122,
      0xfde5380c, 0xa4beea44, 0x4bdecfa9, 0xf6bb4b60, 0xbebfbc70, 0x289b7ec6, 0xeaa127fa,
      0xd4ef3085, 0x04881d05, 0xd9d4d039, 0xe6db99e5, 0x1fa27cf8, 0xc4ac5665, 0xf4292244,
      0x432aff97, 0xab9423a7, 0xfc93a039, 0x655b59c3, 0x8f0ccc92, 0xffeff47d, 0x85845dd1,
      0x6fa87e4f, 0xfe2ce6e0, 0xa3014314, 0x4e0811a1, 0xf7537e82, 0xbd3af235, 0x2ad7d2bb,
      0xeb86d391};
  static constexpr int kShift[64] = {7, 12, 17, 22, 7, 12, 17, 22, 7, 12, 17, 22, 7, 12, 17, 22,
                                     5, 9,  14, 20, 5, 9,  14, 20, 5, 9,  14, 20, 5, 9,  14, 20,
                                     4, 11, 16, 23, 4, 11, 16, 23, 4, 11, 16, 23, 4, 11, 16, 23,
                                     6, 10, 15, 21, 6, 10, 15, 21, 6, 10, 15, 21, 6, 10, 15, 21};

  void transform(const std::uint8_t* block) {
    std::uint32_t m[16];
    for (int i = 0; i < 16; ++i) {
      m[i] = static_cast<std::uint32_t>(block[4 * i]) |
             (static_cast<std::uint32_t>(block[4 * i + 1]) << 8) |
             (static_cast<std::uint32_t>(block[4 * i + 2]) << 16) |
             (static_cast<std::uint32_t>(block[4 * i + 3]) << 24);
    }
    std::uint32_t a = state_[0], b = state_[1], c = state_[2], d = state_[3];
    for (int i = 0; i < 64; ++i) {
      std::uint32_t f;
      int g;
      if (i < 16) {
        f = (b & c) | (~b & d);
        g = i;
      } else if (i < 32) {
        f = (d & b) | (~d & c);
        g = (5 * i + 1) % 16;
      } else if (i < 48) {
        f = b ^ c ^ d;
        g = (3 * i + 5) % 16;
      } else {
        f = c ^ (b | ~d);
        g = (7 * i) % 16;
      }
      std::uint32_t rotated = std::rotl(a + f + kK[i] + m[g], kShift[i]);
      a = d;
      d = c;
      c = b;
      b = b + rotated;
    }
    state_[0] += a;
    state_[1] += b;
    state_[2] += c;
    state_[3] += d;
  }

  std::uint32_t state_[4] = {0x67452301, 0xefcdab89, 0x98badcfe, 0x10325476};
  std::array<std::uint8_t, 64> buffer_{};
  std::uint64_t length_ = 0;
};

inline Md5::Digest md5_digest(std::span<const std::uint8_t> data) {
  Md5 h;
  h.update(data);
  return h.finish();
}

inline Md5::Digest md5_digest(std::string_view data) {
  Md5 h;
  h.update(data);
  return h.finish();
}

}  // namespace tgmon
