#pragma once

// Kind-tagged content identities for messages.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tgmon/checksum.hpp"
#include "tgmon/error.hpp"
#include "tgmon/image.hpp"
#include "tgmon/ingest.hpp"
#include "tgmon/phash.hpp"
#include "tgmon/text.hpp"

namespace tgmon {

struct TextFingerprint {
  std::string normalized;
  ShingleSet shingles;
  Checksum128 digest;  // MD5 of `normalized`

  friend bool operator==(const TextFingerprint&, const TextFingerprint&) = default;
};

struct Fingerprint {
  MediaKind kind = MediaKind::text;
  std::variant<PHash64, Checksum128, TextFingerprint> value;

  /// Fixed-width lowercase hex: 16 digits for images, 32 otherwise (text
  /// uses the digest of its normalized form).
  std::string hex() const {
    if (auto* p = std::get_if<PHash64>(&value)) return p->hex();
    if (auto* c = std::get_if<Checksum128>(&value)) return c->hex();
    return std::get<TextFingerprint>(value).digest.hex();
  }

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

/// Duplicate thresholds.
struct Thresholds {
  int image_hamming = 10;     // merge when hamming <= this
  double text_jaccard = 0.7;  // merge when jaccard >= this
  /// Texts with fewer shingles than this merge only on exact normalized
  /// equality.
  std::size_t text_min_shingles = 2;
};

inline Fingerprint text_fingerprint(std::string_view text) {
  std::string normalized = normalize_text(text);
  ShingleSet shingles = shingles_of_normalized(normalized);
  Checksum128 digest = checksum128(normalized);
  return Fingerprint{MediaKind::text,
                     TextFingerprint{std::move(normalized), std::move(shingles), digest}};
}

struct FingerprintFailure {
  MessageKey key;
  std::string reason;

  friend bool operator==(const FingerprintFailure&, const FingerprintFailure&) = default;
};

using BlobReader = std::function<std::vector<std::uint8_t>(const BlobRef&)>;

/// Images are decoded and hashed; audio, video and documents reuse the
/// checksum of their blob; text is normalized and shingled.
inline std::variant<Fingerprint, FingerprintFailure> fingerprint_message(const RawMessage& m,
                                                                         const BlobReader& read) {
  switch (m.media_kind) {
    case MediaKind::text:
      return text_fingerprint(m.text.value_or(""));
    case MediaKind::image: {
      std::vector<std::uint8_t> bytes;
      try {
        bytes = read(*m.media_ref);
      } catch (const Error& e) {
        return FingerprintFailure{m.key(), e.what()};
      }
      auto img = decode_image(bytes);
      if (!img) return FingerprintFailure{m.key(), "undecodable image"};
      return Fingerprint{MediaKind::image, phash64(*img)};
    }
    case MediaKind::video:
    case MediaKind::audio:
    case MediaKind::document:
      return Fingerprint{m.media_kind, m.media_ref->checksum};
  }
  return FingerprintFailure{m.key(), "unknown media kind"};
}

}  // namespace tgmon
