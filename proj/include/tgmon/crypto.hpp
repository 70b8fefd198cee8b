#pragma once

// Thin wrappers over OpenSSL for keyed MACs, password digests and tokens.

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tgmon/error.hpp"
#include "tgmon/hex.hpp"

namespace tgmon::crypto {

using Sha256 = std::array<std::uint8_t, 32>;

inline Sha256 hmac_sha256(std::span<const std::uint8_t> key, std::string_view message) {
  Sha256 out{};
  unsigned int len = 0;
  if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()),
           reinterpret_cast<const unsigned char*>(message.data()), message.size(), out.data(),
           &len) == nullptr ||
      len != out.size()) {
    throw Error("HMAC-SHA256 failed");
  }
  return out;
}

inline std::vector<std::uint8_t> random_bytes(std::size_t n) {
  std::vector<std::uint8_t> out(n);
  if (RAND_bytes(out.data(), static_cast<int>(n)) != 1) throw Error("RAND_bytes failed");
  return out;
}

inline Sha256 pbkdf2_sha256(std::string_view password, std::span<const std::uint8_t> salt,
                            int iterations) {
  Sha256 out{};
  if (PKCS5_PBKDF2_HMAC(password.data(), static_cast<int>(password.size()), salt.data(),
                        static_cast<int>(salt.size()), iterations, EVP_sha256(),
                        static_cast<int>(out.size()), out.data()) != 1) {
    throw Error("PBKDF2 failed");
  }
  return out;
}

/// Comparison time depends only on the lengths.
inline bool constant_time_equal(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) return false;
  return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace tgmon::crypto
