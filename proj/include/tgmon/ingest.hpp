#pragma once

// Chat-export ingestion: JSON-Lines parsing, sender pseudonymization, the
// monitored-chat registry and invite-link extraction.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "tgmon/blob_ref.hpp"
#include "tgmon/checksum.hpp"
#include "tgmon/crypto.hpp"
#include "tgmon/error.hpp"
#include "tgmon/hex.hpp"
#include "tgmon/media.hpp"
#include "tgmon/time.hpp"

namespace tgmon {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Pseudonyms

/// 32 lowercase hex characters standing in for a raw sender identifier.
class Pseudonym {
 public:
  Pseudonym() = default;

  static std::optional<Pseudonym> parse(std::string_view s) {
    if (!is_lower_hex(s, 32)) return std::nullopt;
    return Pseudonym(std::string(s));
  }

  const std::string& value() const { return value_; }

  friend auto operator<=>(const Pseudonym&, const Pseudonym&) = default;

 private:
  friend class Pseudonymizer;
  explicit Pseudonym(std::string v) : value_(std::move(v)) {}

  std::string value_;
};

/// Keyed MAC over sender identifiers. The secret never leaves this object.
class Pseudonymizer {
 public:
  explicit Pseudonymizer(std::vector<std::uint8_t> secret) : secret_(std::move(secret)) {
    if (secret_.empty()) throw ConfigError("pseudonymization secret is empty");
  }

  explicit Pseudonymizer(std::string_view secret)
      : Pseudonymizer(std::vector<std::uint8_t>(secret.begin(), secret.end())) {}

  Pseudonym operator()(std::string_view sender_id) const {
    auto mac = crypto::hmac_sha256(secret_, sender_id);
    return Pseudonym(to_hex(std::span{mac}.first(16)));
  }

 private:
  std::vector<std::uint8_t> secret_;
};

inline Pseudonym pseudonymize(std::string_view sender_id, std::string_view secret) {
  return Pseudonymizer(secret)(sender_id);
}

// ---------------------------------------------------------------------------
// Chat registry

enum class ChatKind { group, channel };

inline constexpr std::string_view to_string(ChatKind kind) {
  return kind == ChatKind::group ? "group" : "channel";
}

inline std::optional<ChatKind> parse_chat_kind(std::string_view s) {
  if (s == "group") return ChatKind::group;
  if (s == "channel") return ChatKind::channel;
  return std::nullopt;
}

/// Platform cap on group membership; channels are unbounded.
inline constexpr std::int64_t kMaxGroupMembers = 200000;

struct ChatRecord {
  std::string chat_id;
  ChatKind kind = ChatKind::group;
  std::string title;
  std::int64_t member_count = 0;
  Timestamp joined_at{};

  friend bool operator==(const ChatRecord&, const ChatRecord&) = default;
};

/// Reason the record is unacceptable, or nullopt.
inline std::optional<std::string> validate(const ChatRecord& r) {
  if (r.chat_id.empty()) return "chat_id is empty";
  if (r.member_count < 0) return "member_count is negative";
  if (r.kind == ChatKind::group && r.member_count > kMaxGroupMembers) {
    return "group member_count exceeds " + std::to_string(kMaxGroupMembers);
  }
  return std::nullopt;
}

inline json to_json(const ChatRecord& r) {
  return json{{"chat_id", r.chat_id},
              {"kind", to_string(r.kind)},
              {"title", r.title},
              {"member_count", r.member_count},
              {"joined_at", format_timestamp(r.joined_at)}};
}

inline ChatRecord chat_record_from_json(const json& j) {
  if (!j.is_object()) throw DataError("chat record is not an object");
  ChatRecord r;
  try {
    r.chat_id = j.at("chat_id").get<std::string>();
    auto kind = parse_chat_kind(j.at("kind").get<std::string>());
    if (!kind) throw DataError("chat " + r.chat_id + ": unknown kind");
    r.kind = *kind;
    r.title = j.at("title").get<std::string>();
    if (!j.at("member_count").is_number_integer()) {
      throw DataError("chat " + r.chat_id + ": member_count is not an integer");
    }
    r.member_count = j.at("member_count").get<std::int64_t>();
    auto joined = parse_rfc3339_utc(j.at("joined_at").get<std::string>());
    if (!joined) throw DataError("chat " + r.chat_id + ": joined_at is not a UTC timestamp");
    r.joined_at = *joined;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed chat record: ") + e.what());
  }
  return r;
}

/// Monitored chats keyed by chat_id. Single writer.
class ChatRegistry {
 public:
  /// Insert or overwrite by chat_id. Throws DataError naming the violated
  /// invariant.
  void register_chat(const ChatRecord& record) {
    if (auto reason = validate(record)) {
      throw DataError("rejected chat '" + record.chat_id + "': " + *reason);
    }
    chats_[record.chat_id] = record;
  }

  const ChatRecord* find(std::string_view chat_id) const {
    auto it = chats_.find(std::string(chat_id));
    return it == chats_.end() ? nullptr : &it->second;
  }

  /// Display title; chats missing from the registry fall back to their id.
  std::string title_of(std::string_view chat_id) const {
    const ChatRecord* r = find(chat_id);
    return r ? r->title : std::string(chat_id);
  }

  std::size_t size() const { return chats_.size(); }
  bool empty() const { return chats_.empty(); }

  /// Ordered by chat_id.
  std::vector<ChatRecord> records() const {
    std::vector<ChatRecord> out;
    out.reserve(chats_.size());
    for (const auto& [_, r] : chats_) out.push_back(r);
    return out;
  }

  json to_json() const {
    json arr = json::array();
    for (const auto& [_, r] : chats_) arr.push_back(tgmon::to_json(r));
    return arr;
  }

  static ChatRegistry from_json(const json& j) {
    if (!j.is_array()) throw DataError("chat registry must be a JSON array");
    ChatRegistry reg;
    for (const auto& item : j) reg.register_chat(chat_record_from_json(item));
    return reg;
  }

  friend bool operator==(const ChatRegistry&, const ChatRegistry&) = default;

 private:
  std::map<std::string, ChatRecord> chats_;
};

inline ChatRegistry load_registry_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read registry file " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("registry file " + path.string() + " is not valid JSON");
  return ChatRegistry::from_json(j);
}

// ---------------------------------------------------------------------------
// Messages

struct MessageKey {
  std::string chat_id;
  std::string msg_id;

  friend auto operator<=>(const MessageKey&, const MessageKey&) = default;
};

struct RawMessage {
  std::string msg_id;
  std::string chat_id;
  Pseudonym sender;
  Timestamp sent_at{};
  MediaKind media_kind = MediaKind::text;
  std::optional<std::string> text;
  std::optional<BlobRef> media_ref;

  MessageKey key() const { return {chat_id, msg_id}; }

  friend bool operator==(const RawMessage&, const RawMessage&) = default;
};

/// Persisted form: the sender is already a pseudonym, media is a BlobRef.
inline json to_json(const RawMessage& m) {
  json j{{"msg_id", m.msg_id},
         {"chat_id", m.chat_id},
         {"sender", m.sender.value()},
         {"sent_at", format_timestamp(m.sent_at)},
         {"media_kind", to_string(m.media_kind)}};
  if (m.text) j["text"] = *m.text;
  if (m.media_ref) {
    j["media"] = json{{"checksum", m.media_ref->checksum.hex()},
                      {"size_bytes", m.media_ref->size_bytes},
                      {"media_kind", to_string(m.media_ref->media_kind)}};
  }
  return j;
}

inline RawMessage raw_message_from_json(const json& j) {
  auto fail = [](const std::string& what) -> RawMessage { throw DataError("message: " + what); };
  if (!j.is_object()) return fail("not an object");
  RawMessage m;
  try {
    m.msg_id = j.at("msg_id").get<std::string>();
    m.chat_id = j.at("chat_id").get<std::string>();
    auto sender = Pseudonym::parse(j.at("sender").get<std::string>());
    if (!sender) return fail("sender is not a pseudonym");
    m.sender = *sender;
    auto sent = parse_rfc3339_utc(j.at("sent_at").get<std::string>());
    if (!sent) return fail("bad sent_at");
    m.sent_at = *sent;
    auto kind = parse_media_kind(j.at("media_kind").get<std::string>());
    if (!kind) return fail("bad media_kind");
    m.media_kind = *kind;
    if (j.contains("text")) m.text = j.at("text").get<std::string>();
    if (j.contains("media")) {
      const json& b = j.at("media");
      auto sum = Checksum128::from_hex(b.at("checksum").get<std::string>());
      auto bkind = parse_media_kind(b.at("media_kind").get<std::string>());
      if (!sum || !bkind) return fail("bad media reference");
      m.media_ref = BlobRef{*sum, b.at("size_bytes").get<std::uint64_t>(), *bkind};
    }
  } catch (const json::exception& e) {
    return fail(e.what());
  }
  if (m.media_kind == MediaKind::text && (!m.text || m.media_ref)) {
    return fail("text message must carry text and no media");
  }
  if (m.media_kind != MediaKind::text && !m.media_ref) return fail("media message without media");
  return m;
}

// ---------------------------------------------------------------------------
// Export line schema

/// Fields of one export line after schema validation.
struct ExportLine {
  std::string msg_id;
  std::string chat_id;
  std::string sender_id;
  Timestamp sent_at{};
  MediaKind media_kind = MediaKind::text;
  std::optional<std::string> text;
  std::optional<std::string> media_path;
};

/// Validates one decoded export object. Returns the reason on failure.
inline std::variant<ExportLine, std::string> validate_export_object(const json& j) {
  if (!j.is_object()) return std::string("line is not a JSON object");
  ExportLine line;
  auto required_string = [&](const char* name, std::string& out) -> std::optional<std::string> {
    auto it = j.find(name);
    if (it == j.end()) return std::string("missing field '") + name + "'";
    if (!it->is_string()) return std::string("field '") + name + "' is not a string";
    out = it->get<std::string>();
    if (out.empty()) return std::string("field '") + name + "' is empty";
    return std::nullopt;
  };
  auto optional_string = [&](const char* name,
                             std::optional<std::string>& out) -> std::optional<std::string> {
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) return std::string("field '") + name + "' is not a string";
    out = it->get<std::string>();
    return std::nullopt;
  };

  std::string sent_at, kind;
  for (auto [name, slot] : {std::pair<const char*, std::string*>{"msg_id", &line.msg_id},
                            {"chat_id", &line.chat_id},
                            {"sender_id", &line.sender_id},
                            {"sent_at", &sent_at},
                            {"media_kind", &kind}}) {
    if (auto err = required_string(name, *slot)) return *err;
  }
  if (auto err = optional_string("text", line.text)) return *err;
  if (auto err = optional_string("media_path", line.media_path)) return *err;

  auto ts = parse_rfc3339_utc(sent_at);
  if (!ts) return "sent_at '" + sent_at + "' is not an RFC-3339 UTC timestamp";
  line.sent_at = *ts;
  auto mk = parse_media_kind(kind);
  if (!mk) return "unknown media_kind '" + kind + "'";
  line.media_kind = *mk;

  if (line.media_kind == MediaKind::text) {
    if (!line.text) return std::string("text message without 'text'");
    if (line.media_path) return std::string("text message with 'media_path'");
  } else {
    if (!line.media_path || line.media_path->empty()) {
      return std::string("media message without 'media_path'");
    }
    if (std::filesystem::path(*line.media_path).is_absolute()) {
      return std::string("media_path must be relative");
    }
  }
  return line;
}

/// Export-schema line for a stored message: the pseudonym takes the place of
/// sender_id and media_path points at the content-addressed blob.
inline json to_export_json(const RawMessage& m) {
  json j{{"msg_id", m.msg_id},
         {"chat_id", m.chat_id},
         {"sender_id", m.sender.value()},
         {"sent_at", format_timestamp(m.sent_at)},
         {"media_kind", to_string(m.media_kind)}};
  if (m.text) j["text"] = *m.text;
  if (m.media_ref) j["media_path"] = m.media_ref->relative_path();
  return j;
}

struct ParseWarning {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct ParseReport {
  std::size_t lines = 0;
  std::size_t parsed = 0;
  std::size_t invalid = 0;
  std::size_t duplicates = 0;
  std::vector<ParseWarning> warnings;

  ParseReport& operator+=(const ParseReport& o) {
    lines += o.lines;
    parsed += o.parsed;
    invalid += o.invalid;
    duplicates += o.duplicates;
    warnings.insert(warnings.end(), o.warnings.begin(), o.warnings.end());
    return *this;
  }
};

struct ExportParse {
  std::vector<RawMessage> messages;
  ParseReport report;
};

/// Turns a media payload file into a BlobRef (and usually stores it). Throws
/// on an unreadable payload; the caller counts the line as invalid.
using MediaSink = std::function<BlobRef(const std::filesystem::path& payload, MediaKind kind)>;

/// Reads and hashes the payload without storing it.
inline BlobRef hash_media_file(const std::filesystem::path& payload, MediaKind kind) {
  std::ifstream in(payload, std::ios::binary);
  if (!in) throw DataError("cannot read media file " + payload.string());
  Md5 h;
  std::uint64_t size = 0;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    h.update(std::string_view(buf, static_cast<std::size_t>(in.gcount())));
    size += static_cast<std::uint64_t>(in.gcount());
  }
  return BlobRef{Checksum128{h.finish()}, size, kind};
}

/// Parses one JSON-Lines export. Lines are validated in full before any
/// side effect, so an invalid line never yields a partial message.
/// `seen` carries (chat_id, msg_id) keys across files; duplicates are skipped.
inline ExportParse parse_export(const std::filesystem::path& path, const Pseudonymizer& pseudonymize,
                                const MediaSink& sink, std::set<MessageKey>& seen) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read export file " + path.string());
  const std::filesystem::path base = path.parent_path();

  ExportParse out;
  auto& report = out.report;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.find_first_not_of(" \t") == std::string::npos) continue;
    ++report.lines;

    auto warn = [&](std::string message) {
      report.warnings.push_back({line_no, std::move(message)});
    };

    json j = json::parse(raw, nullptr, false);
    if (j.is_discarded()) {
      ++report.invalid;
      warn("malformed JSON");
      continue;
    }
    auto checked = validate_export_object(j);
    if (auto* err = std::get_if<std::string>(&checked)) {
      ++report.invalid;
      warn(*err);
      continue;
    }
    auto& line = std::get<ExportLine>(checked);
    MessageKey key{line.chat_id, line.msg_id};
    if (seen.contains(key)) {
      ++report.duplicates;
      warn("duplicate message (" + line.chat_id + ", " + line.msg_id + ")");
      continue;
    }

    std::optional<BlobRef> ref;
    if (line.media_path) {
      try {
        ref = sink(base / *line.media_path, line.media_kind);
      } catch (const Error& e) {
        ++report.invalid;
        warn(e.what());
        continue;
      }
    }

    seen.insert(key);
    ++report.parsed;
    out.messages.push_back(RawMessage{std::move(line.msg_id), std::move(line.chat_id),
                                      pseudonymize(line.sender_id), line.sent_at, line.media_kind,
                                      std::move(line.text), ref});
  }
  return out;
}

inline ExportParse parse_export(const std::filesystem::path& path, const Pseudonymizer& pseudonymize,
                                const MediaSink& sink = hash_media_file) {
  std::set<MessageKey> seen;
  return parse_export(path, pseudonymize, sink, seen);
}

// ---------------------------------------------------------------------------
// Invite links

struct InviteLink {
  std::string url;
  std::string group_key;

  friend bool operator==(const InviteLink&, const InviteLink&) = default;
};

namespace detail {
inline bool is_group_key_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
         c == '-';
}
}  // namespace detail

/// All non-overlapping `https://t.me/joinchat/<key>` and
/// `https://telegram.me/<key>` occurrences, left to right. The key is the
/// maximal run of [A-Za-z0-9_-] after the prefix and must be non-empty.
inline std::vector<InviteLink> extract_invite_links(std::string_view text) {
  static constexpr std::string_view kPrefixes[] = {"https://t.me/joinchat/", "https://telegram.me/"};
  std::vector<InviteLink> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t best = std::string_view::npos;
    std::string_view prefix;
    for (auto p : kPrefixes) {
      std::size_t at = text.find(p, pos);
      if (at < best) {
        best = at;
        prefix = p;
      }
    }
    if (best == std::string_view::npos) break;
    std::size_t key_begin = best + prefix.size();
    std::size_t key_end = key_begin;
    while (key_end < text.size() && detail::is_group_key_char(text[key_end])) ++key_end;
    if (key_end == key_begin) {
      pos = best + 1;
      continue;
    }
    out.push_back(InviteLink{std::string(text.substr(best, key_end - best)),
                             std::string(text.substr(key_begin, key_end - key_begin))});
    pos = key_end;
  }
  return out;
}

}  // namespace tgmon
