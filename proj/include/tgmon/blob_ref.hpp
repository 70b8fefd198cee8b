#pragma once

#include <compare>
#include <cstdint>
#include <string>

#include "tgmon/checksum.hpp"
#include "tgmon/media.hpp"

namespace tgmon {

/// Reference to a stored media payload; the on-disk location is derived from
/// the checksum alone.
struct BlobRef {
  Checksum128 checksum;
  std::uint64_t size_bytes = 0;
  MediaKind media_kind = MediaKind::document;

  /// `blobs/<first 2 hex>/<full hex>`, relative to the dataset root.
  std::string relative_path() const {
    std::string hex = checksum.hex();
    return "blobs/" + hex.substr(0, 2) + "/" + hex;
  }

  friend bool operator==(const BlobRef&, const BlobRef&) = default;
};

}  // namespace tgmon
