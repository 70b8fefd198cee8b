#pragma once

// Batch stages run by the CLI: ingest a directory of exports into a dataset,
// then fingerprint and cluster it.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "tgmon/cluster.hpp"
#include "tgmon/fingerprint.hpp"
#include "tgmon/ingest.hpp"
#include "tgmon/store.hpp"

namespace tgmon {

/// Runs `fn(i)` for i in [0, n) on up to hardware_concurrency threads.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

struct FileWarning {
  std::filesystem::path file;
  ParseWarning warning;
};

struct IngestResult {
  IngestStats stats;
  std::vector<FileWarning> warnings;
};

/// Export files under `input`, sorted by path.
inline std::vector<std::filesystem::path> find_exports(const std::filesystem::path& input) {
  std::error_code ec;
  if (!std::filesystem::is_directory(input, ec)) {
    throw DataError("input directory " + input.string() + " does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(input)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

/// Parses every export under `input` (plus `input/registry.json` when
/// present) and replaces the dataset's registry and message table. Existing
/// clusters are dropped; `process` rebuilds them. Blobs are stored only for
/// messages that survive deduplication.
inline IngestResult ingest_directory(const std::filesystem::path& input,
                                     const std::filesystem::path& dataset_dir,
                                     const Pseudonymizer& pseudonymize) {
  auto files = find_exports(input);

  ChatRegistry registry;
  if (std::filesystem::exists(input / "registry.json")) {
    registry = load_registry_file(input / "registry.json");
  }

  // Parse in parallel, hashing payloads and remembering where they live.
  struct FileResult {
    ExportParse parse;
    std::map<Checksum128, std::filesystem::path> sources;
  };
  std::vector<FileResult> results(files.size());
  parallel_for(files.size(), [&](std::size_t i) {
    auto& sources = results[i].sources;
    MediaSink sink = [&sources](const std::filesystem::path& p, MediaKind kind) {
      BlobRef ref = hash_media_file(p, kind);
      sources.emplace(ref.checksum, p);
      return ref;
    };
    std::set<MessageKey> seen;
    results[i].parse = parse_export(files[i], pseudonymize, sink, seen);
  });

  IngestResult out;
  Dataset data;
  data.registry = std::move(registry);
  std::set<MessageKey> seen;
  BlobStore blobs(dataset_dir / "blobs");
  std::set<Checksum128> stored;
  for (std::size_t i = 0; i < files.size(); ++i) {
    auto& r = results[i];
    ParseReport report = r.parse.report;
    for (auto& m : r.parse.messages) {
      if (!seen.insert(m.key()).second) {
        --report.parsed;
        ++report.duplicates;
        report.warnings.push_back({0, "duplicate message (" + m.chat_id + ", " + m.msg_id +
                                          ") from an earlier file"});
        continue;
      }
      if (m.media_ref && stored.insert(m.media_ref->checksum).second) {
        BlobRef ref = blobs.put_file(r.sources.at(m.media_ref->checksum), m.media_kind);
        if (ref.checksum != m.media_ref->checksum) {
          throw DataError("media file changed during ingest: " +
                          r.sources.at(m.media_ref->checksum).string());
        }
      }
      data.messages.push_back(std::move(m));
    }
    out.stats.lines += report.lines;
    out.stats.parsed += report.parsed;
    out.stats.invalid += report.invalid;
    out.stats.duplicates += report.duplicates;
    for (auto& w : report.warnings) out.warnings.push_back({files[i], std::move(w)});
  }
  out.stats.files = files.size();
  out.stats.blobs = stored.size();
  data.ingest = out.stats;
  snapshot(data, dataset_dir);
  return out;
}

struct ProcessResult {
  ProcessStats stats;
  std::vector<FingerprintFailure> failures;
};

/// Fingerprints every message and builds the cluster table.
inline ClusterSet fingerprint_and_cluster(const Dataset& data, const BlobStore& blobs,
                                          const Thresholds& thresholds,
                                          std::vector<FingerprintFailure>& failures,
                                          std::size_t& fingerprinted) {
  std::vector<std::variant<Fingerprint, FingerprintFailure>> results(data.messages.size());
  BlobReader read = [&blobs](const BlobRef& ref) { return blobs.get_blob(ref); };
  parallel_for(data.messages.size(),
               [&](std::size_t i) { results[i] = fingerprint_message(data.messages[i], read); });

  std::vector<FingerprintedMessage> ok;
  ok.reserve(data.messages.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (auto* fp = std::get_if<Fingerprint>(&results[i])) {
      ok.push_back(FingerprintedMessage{&data.messages[i], std::move(*fp)});
    } else {
      failures.push_back(std::get<FingerprintFailure>(results[i]));
    }
  }
  std::sort(failures.begin(), failures.end(),
            [](const auto& a, const auto& b) { return a.key < b.key; });
  fingerprinted = ok.size();
  return build_clusters(ok, thresholds);
}

inline ProcessResult process_dataset(const std::filesystem::path& dataset_dir,
                                     const Thresholds& thresholds) {
  Dataset data = load_snapshot(dataset_dir);
  BlobStore blobs(dataset_dir / "blobs");

  std::vector<FingerprintFailure> failures;
  std::size_t fingerprinted = 0;
  ClusterSet clusters = fingerprint_and_cluster(data, blobs, thresholds, failures, fingerprinted);

  ProcessStats stats;
  stats.fingerprinted = fingerprinted;
  stats.failures = failures.size();
  for (MediaKind k : kAllMediaKinds) stats.clusters_per_kind[std::string(to_string(k))] = 0;
  for (const auto& c : clusters.clusters) ++stats.clusters_per_kind[std::string(to_string(c.kind))];

  data.clusters = std::move(clusters.clusters);
  data.failures = failures;
  data.process = stats;
  snapshot(data, dataset_dir);
  return ProcessResult{stats, std::move(failures)};
}

}  // namespace tgmon
