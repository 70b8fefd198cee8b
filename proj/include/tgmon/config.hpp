#pragma once

// Operator configuration: `key = value` lines, `#` starts a comment, blank
// lines ignored. Relative paths resolve against the config file's directory.
//
//   pseudonym_secret_file   file holding the pseudonymization secret
//   pseudonym_secret_env    or: environment variable holding it
//   image_hamming_threshold merge images at Hamming distance <= N (0..64, default 10)
//   text_jaccard_threshold  merge texts at Jaccard >= x (0..1], default 0.7
//   text_min_shingles       smaller texts merge only when equal (default 2)
//   accounts_file           API accounts (JSON)
//   cors_origin             dashboard origin allowed by CORS
//   bind                    host:port for `serve` (default 127.0.0.1:8080)
//   token_ttl_seconds       session lifetime (default 3600)
//   public_media_base_url   prefix for media URLs handed to reverse image search

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "tgmon/error.hpp"
#include "tgmon/fingerprint.hpp"
#include "tgmon/ingest.hpp"

namespace tgmon {

struct Config {
  std::optional<std::vector<std::uint8_t>> pseudonym_secret;
  Thresholds thresholds;
  std::filesystem::path accounts_file;
  std::string cors_origin = "http://localhost:5173";
  std::string bind = "127.0.0.1:8080";
  std::int64_t token_ttl_seconds = 3600;
  std::string public_media_base_url = "http://127.0.0.1:8080/api/media/";

  /// Throws ConfigError when no usable secret is configured.
  Pseudonymizer pseudonymizer() const {
    if (!pseudonym_secret) throw ConfigError("no pseudonymization secret configured");
    return Pseudonymizer(*pseudonym_secret);
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

inline std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": '" + v + "' is not an integer");
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(key + ": '" + v + "' is not a number");
  }
}

inline std::vector<std::uint8_t> secret_bytes(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  if (s.empty()) throw ConfigError("pseudonymization secret is empty");
  return std::vector<std::uint8_t>(s.begin(), s.end());
}

}  // namespace detail

inline Config parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  Config cfg;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::string line = detail::trim(raw);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = detail::trim(std::string_view(line).substr(0, eq));
    std::string value = detail::trim(std::string_view(line).substr(eq + 1));

    if (key == "pseudonym_secret_file") {
      std::ifstream in(base_dir / value, std::ios::binary);
      if (!in) throw ConfigError("cannot read secret file " + (base_dir / value).string());
      std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      cfg.pseudonym_secret = detail::secret_bytes(std::move(s));
    } else if (key == "pseudonym_secret_env") {
      const char* v = std::getenv(value.c_str());
      if (v == nullptr) throw ConfigError("environment variable " + value + " is not set");
      cfg.pseudonym_secret = detail::secret_bytes(v);
    } else if (key == "image_hamming_threshold") {
      auto v = detail::parse_int(key, value);
      if (v < 0 || v > 64) throw ConfigError(key + " must be within 0..64");
      cfg.thresholds.image_hamming = static_cast<int>(v);
    } else if (key == "text_jaccard_threshold") {
      double v = detail::parse_double(key, value);
      if (!(v > 0.0 && v <= 1.0)) throw ConfigError(key + " must be within (0, 1]");
      cfg.thresholds.text_jaccard = v;
    } else if (key == "text_min_shingles") {
      auto v = detail::parse_int(key, value);
      if (v < 0) throw ConfigError(key + " must be non-negative");
      cfg.thresholds.text_min_shingles = static_cast<std::size_t>(v);
    } else if (key == "accounts_file") {
      cfg.accounts_file = base_dir / value;
    } else if (key == "cors_origin") {
      cfg.cors_origin = value;
    } else if (key == "bind") {
      cfg.bind = value;
    } else if (key == "token_ttl_seconds") {
      auto v = detail::parse_int(key, value);
      if (v <= 0) throw ConfigError(key + " must be positive");
      cfg.token_ttl_seconds = v;
    } else if (key == "public_media_base_url") {
      cfg.public_media_base_url = value;
    } else {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

inline Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text, path.parent_path());
}

/// Splits `host:port`.
inline std::pair<std::string, int> split_bind_address(const std::string& bind) {
  auto colon = bind.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw ConfigError("bind address '" + bind + "' is not host:port");
  }
  auto port = detail::parse_int("bind", bind.substr(colon + 1));
  if (port < 0 || port > 65535) throw ConfigError("bind port out of range");
  return {bind.substr(0, colon), static_cast<int>(port)};
}

}  // namespace tgmon
