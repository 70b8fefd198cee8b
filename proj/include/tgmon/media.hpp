#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace tgmon {

enum class MediaKind { text, image, video, audio, document };

inline constexpr std::array<MediaKind, 5> kAllMediaKinds = {
    MediaKind::text, MediaKind::image, MediaKind::video, MediaKind::audio, MediaKind::document};

inline constexpr std::string_view to_string(MediaKind kind) {
  switch (kind) {
    case MediaKind::text: return "text";
    case MediaKind::image: return "image";
    case MediaKind::video: return "video";
    case MediaKind::audio: return "audio";
    case MediaKind::document: return "document";
  }
  return "text";
}

inline std::optional<MediaKind> parse_media_kind(std::string_view s) {
  for (MediaKind k : kAllMediaKinds) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

}  // namespace tgmon
