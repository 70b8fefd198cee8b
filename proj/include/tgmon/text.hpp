#pragma once

// Text normalization, word 3-gram shingles and the Jaccard index.

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "tgmon/error.hpp"

namespace tgmon {

namespace detail {

inline bool is_dropped_code_point(UChar32 c) {
  const auto mask = U_GET_GC_MASK(c);
  if (mask & (U_GC_P_MASK | U_GC_S_MASK | U_GC_CF_MASK)) return true;
  if ((mask & U_GC_CC_MASK) && !u_isUWhiteSpace(c)) return true;
  return u_hasBinaryProperty(c, UCHAR_DEFAULT_IGNORABLE_CODE_POINT);
}

inline const icu::Normalizer2& nfc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || n == nullptr) throw Error("ICU NFC normalizer unavailable");
  return *n;
}

}  // namespace detail

/// NFC, lowercase (root locale), remove punctuation and symbols (general
/// categories P* and S*), collapse runs of whitespace to one space, trim.
inline std::string normalize_text(std::string_view utf8) {
  const auto& nfc = detail::nfc();
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString s = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  s = nfc.normalize(s, status);
  s.toLower(icu::Locale::getRoot());
  s = nfc.normalize(s, status);
  if (U_FAILURE(status)) throw Error("ICU normalization failed");

  icu::UnicodeString cleaned;
  bool pending_space = false;
  for (int32_t i = 0; i < s.length();) {
    UChar32 c = s.char32At(i);
    i += U16_LENGTH(c);
    if (u_isUWhiteSpace(c)) {
      pending_space = !cleaned.isEmpty();
      continue;
    }
    if (detail::is_dropped_code_point(c)) continue;
    if (pending_space) {
      cleaned.append(static_cast<UChar>(u' '));
      pending_space = false;
    }
    cleaned.append(c);
  }
  std::string out;
  cleaned.toUTF8String(out);
  return out;
}

/// Sorted, duplicate-free shingles.
struct ShingleSet {
  std::vector<std::string> shingles;

  std::size_t size() const { return shingles.size(); }
  bool empty() const { return shingles.empty(); }

  friend bool operator==(const ShingleSet&, const ShingleSet&) = default;
};

inline std::vector<std::string_view> split_spaces(std::string_view s) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t end = s.find(' ', pos);
    if (end == std::string_view::npos) end = s.size();
    if (end > pos) tokens.push_back(s.substr(pos, end - pos));
    pos = end + 1;
  }
  return tokens;
}

/// Shingles of already-normalized text.
inline ShingleSet shingles_of_normalized(std::string_view normalized) {
  auto tokens = split_spaces(normalized);
  ShingleSet out;
  if (tokens.size() < 3) {
    for (auto t : tokens) out.shingles.emplace_back(t);
  } else {
    out.shingles.reserve(tokens.size() - 2);
    for (std::size_t i = 0; i + 2 < tokens.size(); ++i) {
      std::string sh;
      sh.reserve(tokens[i].size() + tokens[i + 1].size() + tokens[i + 2].size() + 2);
      sh.append(tokens[i]).append(" ").append(tokens[i + 1]).append(" ").append(tokens[i + 2]);
      out.shingles.push_back(std::move(sh));
    }
  }
  std::sort(out.shingles.begin(), out.shingles.end());
  out.shingles.erase(std::unique(out.shingles.begin(), out.shingles.end()), out.shingles.end());
  return out;
}

/// Word 3-gram shingles of normalized text; fewer than three tokens give
/// the token set.
inline ShingleSet text_shingles(std::string_view text) {
  return shingles_of_normalized(normalize_text(text));
}

/// |a ∩ b| / |a ∪ b|, and 1 when both are empty.
inline double jaccard(const ShingleSet& a, const ShingleSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  auto ia = a.shingles.begin();
  auto ib = b.shingles.begin();
  while (ia != a.shingles.end() && ib != b.shingles.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

}  // namespace tgmon
