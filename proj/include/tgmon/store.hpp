#pragma once

// Dataset persistence: a content-addressed blob directory plus JSON-Lines
// tables.
//
//   <dataset>/registry.json    chat registry (JSON array)
//   <dataset>/messages.jsonl   one pseudonymized message per line
//   <dataset>/clusters.jsonl   one content cluster per line
//   <dataset>/meta.json        format version, run statistics, fingerprint
//                              failures, digests of the table files
//   <dataset>/blobs/ab/ab...   media payloads named by their MD5
//
// Every table line carries a "digest" field (MD5 of the line without it), so
// a tampered line is reported by number. Files are written to a temporary
// name and renamed into place; meta.json goes last and pins the digests of
// the other files, so a reader never accepts a half-written snapshot.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "json.hpp"

#include "tgmon/blob_ref.hpp"
#include "tgmon/checksum.hpp"
#include "tgmon/cluster.hpp"
#include "tgmon/error.hpp"
#include "tgmon/fingerprint.hpp"
#include "tgmon/ingest.hpp"

namespace tgmon {

namespace fs = std::filesystem;

inline constexpr int kDatasetFormatVersion = 1;

namespace detail {

inline fs::path temp_sibling(const fs::path& target) {
  static std::atomic<unsigned long> counter{0};
  return target.parent_path() / (target.filename().string() + ".tmp." + std::to_string(::getpid()) +
                                 "." + std::to_string(counter.fetch_add(1)));
}

/// Writes `bytes` to `target` through a temporary file and a rename.
inline void write_file_atomic(const fs::path& target, std::string_view bytes) {
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  if (ec) throw StorageError("cannot create " + target.parent_path().string() + ": " + ec.message());
  fs::path tmp = temp_sibling(target);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      throw StorageError("write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw StorageError("cannot rename into " + target.string());
  }
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

inline std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::string s = read_file(path);
  return std::vector<std::uint8_t>(s.begin(), s.end());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Blobs

class BlobStore {
 public:
  explicit BlobStore(fs::path root) : root_(std::move(root)) {}

  const fs::path& root() const { return root_; }

  fs::path path_of(const Checksum128& sum) const {
    std::string hex = sum.hex();
    return root_ / hex.substr(0, 2) / hex;
  }

  /// Idempotent: identical bytes map to the same file, which is not
  /// rewritten once present.
  BlobRef put_blob(std::span<const std::uint8_t> payload, MediaKind kind) const {
    BlobRef ref{checksum128(payload), payload.size(), kind};
    fs::path target = path_of(ref.checksum);
    std::error_code ec;
    if (fs::is_regular_file(target, ec) && fs::file_size(target, ec) == payload.size()) return ref;
    detail::write_file_atomic(
        target, std::string_view(reinterpret_cast<const char*>(payload.data()), payload.size()));
    return ref;
  }

  BlobRef put_file(const fs::path& payload, MediaKind kind) const {
    std::vector<std::uint8_t> bytes;
    try {
      bytes = detail::read_bytes(payload);
    } catch (const NotFoundError&) {
      throw DataError("cannot read media file " + payload.string());
    }
    return put_blob(bytes, kind);
  }

  bool contains(const Checksum128& sum) const {
    std::error_code ec;
    return fs::is_regular_file(path_of(sum), ec);
  }

  /// Exact stored bytes; the checksum is verified on every read.
  std::vector<std::uint8_t> get(const Checksum128& sum) const {
    fs::path p = path_of(sum);
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) throw NotFoundError("blob " + sum.hex() + " not found");
    auto bytes = detail::read_bytes(p);
    if (checksum128(bytes) != sum) throw CorruptionError("blob " + sum.hex() + " is corrupted");
    return bytes;
  }

  std::vector<std::uint8_t> get_blob(const BlobRef& ref) const {
    auto bytes = get(ref.checksum);
    if (bytes.size() != ref.size_bytes) {
      throw CorruptionError("blob " + ref.checksum.hex() + " has unexpected size");
    }
    return bytes;
  }

  /// Number of stored payload files.
  std::size_t file_count() const {
    std::error_code ec;
    if (!fs::is_directory(root_, ec)) return 0;
    std::size_t n = 0;
    for (const auto& e : fs::recursive_directory_iterator(root_)) {
      if (e.is_regular_file() && e.path().filename().string().find(".tmp.") == std::string::npos) {
        ++n;
      }
    }
    return n;
  }

 private:
  fs::path root_;
};

// ---------------------------------------------------------------------------
// Tables

struct IngestStats {
  std::size_t files = 0;
  std::size_t lines = 0;
  std::size_t parsed = 0;
  std::size_t invalid = 0;
  std::size_t duplicates = 0;
  std::size_t blobs = 0;  // distinct payloads referenced

  friend bool operator==(const IngestStats&, const IngestStats&) = default;
};

struct ProcessStats {
  std::size_t fingerprinted = 0;
  std::size_t failures = 0;
  std::map<std::string, std::size_t> clusters_per_kind;

  friend bool operator==(const ProcessStats&, const ProcessStats&) = default;
};

struct Dataset {
  ChatRegistry registry;
  std::vector<RawMessage> messages;
  std::vector<ContentCluster> clusters;
  std::vector<FingerprintFailure> failures;
  IngestStats ingest;
  ProcessStats process;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

namespace detail {

inline std::string digest_line(json j) {
  j.erase("digest");
  std::string body = j.dump();
  j["digest"] = checksum128(body).hex();
  return j.dump();
}

template <typename Row>
std::string jsonl_table(const std::vector<Row>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += digest_line(to_json(r));
    out += '\n';
  }
  return out;
}

/// Parses a digest-guarded JSON-Lines table, calling `row` for each line.
template <typename OnRow>
void read_jsonl_table(const std::string& name, const std::string& bytes, OnRow&& row) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    std::size_t end = bytes.find('\n', pos);
    if (end == std::string::npos) end = bytes.size();
    std::string_view line(bytes.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    auto where = name + " line " + std::to_string(line_no);
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("digest") || !j["digest"].is_string()) {
      throw IntegrityError(where + ": unreadable record");
    }
    std::string stored = j["digest"].get<std::string>();
    j.erase("digest");
    if (checksum128(j.dump()).hex() != stored) throw IntegrityError(where + ": digest mismatch");
    try {
      row(j);
    } catch (const DataError& e) {
      throw IntegrityError(where + ": " + e.what());
    }
  }
}

inline json to_json(const IngestStats& s) {
  return json{{"files", s.files},     {"lines", s.lines},           {"parsed", s.parsed},
              {"invalid", s.invalid}, {"duplicates", s.duplicates}, {"blobs", s.blobs}};
}

inline json to_json(const ProcessStats& s) {
  return json{{"fingerprinted", s.fingerprinted},
              {"failures", s.failures},
              {"clusters_per_kind", s.clusters_per_kind}};
}

}  // namespace detail

/// Writes every table of `data` under `dir`. Does not touch blobs.
inline void snapshot(const Dataset& data, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw StorageError("cannot create dataset directory " + dir.string());

  const std::string registry = data.registry.to_json().dump(2) + "\n";
  const std::string messages = detail::jsonl_table(data.messages);
  const std::string clusters = detail::jsonl_table(data.clusters);

  json failures = json::array();
  for (const auto& f : data.failures) {
    failures.push_back(
        json{{"chat_id", f.key.chat_id}, {"msg_id", f.key.msg_id}, {"reason", f.reason}});
  }
  json meta{{"format_version", kDatasetFormatVersion},
            {"ingest", detail::to_json(data.ingest)},
            {"process", detail::to_json(data.process)},
            {"fingerprint_failures", failures},
            {"files",
             {{"registry.json", checksum128(registry).hex()},
              {"messages.jsonl", checksum128(messages).hex()},
              {"clusters.jsonl", checksum128(clusters).hex()}}}};

  detail::write_file_atomic(dir / "registry.json", registry);
  detail::write_file_atomic(dir / "messages.jsonl", messages);
  detail::write_file_atomic(dir / "clusters.jsonl", clusters);
  detail::write_file_atomic(dir / "meta.json", meta.dump(2) + "\n");
}

inline bool has_snapshot(const fs::path& dir) {
  std::error_code ec;
  return fs::is_regular_file(dir / "meta.json", ec);
}

/// Loads and verifies a snapshot: format version, per-line digests, file
/// digests and referential integrity (cluster members exist; media messages
/// have a blob or a recorded fingerprint failure).
inline Dataset load_snapshot(const fs::path& dir) {
  if (!has_snapshot(dir)) throw NotFoundError("no dataset at " + dir.string());
  json meta = json::parse(detail::read_file(dir / "meta.json"), nullptr, false);
  if (meta.is_discarded() || !meta.is_object()) throw IntegrityError("meta.json is unreadable");
  int version = meta.value("format_version", -1);
  if (version != kDatasetFormatVersion) {
    throw MigrationError("dataset format version " + std::to_string(version) +
                         " is not supported (expected " + std::to_string(kDatasetFormatVersion) +
                         ")");
  }

  Dataset data;
  const std::string registry = detail::read_file(dir / "registry.json");
  const std::string messages = detail::read_file(dir / "messages.jsonl");
  const std::string clusters = detail::read_file(dir / "clusters.jsonl");

  try {
    json reg = json::parse(registry, nullptr, false);
    if (reg.is_discarded()) throw IntegrityError("registry.json is unreadable");
    data.registry = ChatRegistry::from_json(reg);
  } catch (const DataError& e) {
    throw IntegrityError(std::string("registry.json: ") + e.what());
  }
  detail::read_jsonl_table("messages.jsonl", messages,
                           [&](const json& j) { data.messages.push_back(raw_message_from_json(j)); });
  detail::read_jsonl_table("clusters.jsonl", clusters, [&](const json& j) {
    data.clusters.push_back(content_cluster_from_json(j));
  });

  try {
    const json& files = meta.at("files");
    for (auto [name, bytes] : {std::pair<const char*, const std::string*>{"registry.json", &registry},
                               {"messages.jsonl", &messages},
                               {"clusters.jsonl", &clusters}}) {
      if (files.at(name).get<std::string>() != checksum128(*bytes).hex()) {
        throw IntegrityError(std::string(name) + " does not match meta.json");
      }
    }
    const json& in = meta.at("ingest");
    data.ingest = IngestStats{in.at("files"),   in.at("lines"),      in.at("parsed"),
                              in.at("invalid"), in.at("duplicates"), in.at("blobs")};
    const json& pr = meta.at("process");
    data.process.fingerprinted = pr.at("fingerprinted");
    data.process.failures = pr.at("failures");
    data.process.clusters_per_kind = pr.at("clusters_per_kind").get<std::map<std::string, std::size_t>>();
    for (const auto& f : meta.at("fingerprint_failures")) {
      data.failures.push_back(FingerprintFailure{
          MessageKey{f.at("chat_id").get<std::string>(), f.at("msg_id").get<std::string>()},
          f.at("reason").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("meta.json: ") + e.what());
  }

  // Referential integrity.
  std::set<MessageKey> keys;
  for (const auto& m : data.messages) {
    if (!keys.insert(m.key()).second) {
      throw IntegrityError("duplicate message (" + m.chat_id + ", " + m.msg_id + ")");
    }
  }
  for (const auto& c : data.clusters) {
    for (const auto& member : c.members) {
      if (!keys.contains(member.key)) {
        throw IntegrityError("cluster " + c.cluster_id + " references missing message (" +
                             member.key.chat_id + ", " + member.key.msg_id + ")");
      }
    }
  }
  std::set<MessageKey> failed;
  for (const auto& f : data.failures) failed.insert(f.key);
  BlobStore blobs(dir / "blobs");
  for (const auto& m : data.messages) {
    if (m.media_ref && !blobs.contains(m.media_ref->checksum) && !failed.contains(m.key())) {
      throw IntegrityError("message (" + m.chat_id + ", " + m.msg_id + ") references missing blob " +
                           m.media_ref->checksum.hex());
    }
  }
  return data;
}

}  // namespace tgmon
