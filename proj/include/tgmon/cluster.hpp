#pragma once

// Single-link grouping of messages into content clusters, plus per-cluster
// popularity counters.
//
// Two messages of the same kind are similar when
//   image:               hamming(phash) <= Thresholds::image_hamming
//   video/audio/document: equal checksums
//   text:                equal normalized text, or (both sets holding at
//                        least Thresholds::text_min_shingles shingles)
//                        jaccard >= Thresholds::text_jaccard
// and clusters are the connected components of that relation.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "tgmon/bk_tree.hpp"
#include "tgmon/error.hpp"
#include "tgmon/fingerprint.hpp"
#include "tgmon/ingest.hpp"
#include "tgmon/time.hpp"
#include "tgmon/union_find.hpp"

namespace tgmon {

struct FingerprintedMessage {
  const RawMessage* message = nullptr;
  Fingerprint fingerprint;
};

struct ClusterMember {
  MessageKey key;
  std::string fingerprint;  // hex

  friend bool operator==(const ClusterMember&, const ClusterMember&) = default;
};

struct ContentCluster {
  std::string cluster_id;  // "<kind>-<smallest member fingerprint hex>"
  MediaKind kind = MediaKind::text;
  /// Earliest member's blob (media) or normalized text (text).
  std::optional<BlobRef> representative_blob;
  std::optional<std::string> representative_text;
  std::vector<ClusterMember> members;  // sorted by key
  std::size_t share_count = 0;
  std::size_t distinct_groups = 0;
  std::size_t distinct_senders = 0;
  Timestamp first_seen{};
  Timestamp last_seen{};

  friend bool operator==(const ContentCluster&, const ContentCluster&) = default;
};

inline std::string make_cluster_id(MediaKind kind, std::string_view fingerprint_hex) {
  return std::string(to_string(kind)) + "-" + std::string(fingerprint_hex);
}

/// Earliest by (sent_at, chat_id, msg_id).
inline bool earlier(const RawMessage& a, const RawMessage& b) {
  return std::tie(a.sent_at, a.chat_id, a.msg_id) < std::tie(b.sent_at, b.chat_id, b.msg_id);
}

// ---------------------------------------------------------------------------
// Similarity edges per kind. Each routine unions indices into `uf`, where
// indices address `items`.

namespace detail {

inline void link_checksums(std::span<const FingerprintedMessage* const> items, UnionFind& uf) {
  std::map<Checksum128, std::size_t> first;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& sum = std::get<Checksum128>(items[i]->fingerprint.value);
    auto [it, inserted] = first.emplace(sum, i);
    if (!inserted) uf.unite(it->second, i);
  }
}

inline void link_images(std::span<const FingerprintedMessage* const> items, int max_distance,
                        UnionFind& uf) {
  std::map<PHash64, std::size_t> first;
  HammingIndex index;
  for (std::size_t i = 0; i < items.size(); ++i) {
    PHash64 h = std::get<PHash64>(items[i]->fingerprint.value);
    auto [it, inserted] = first.emplace(h, i);
    if (inserted) {
      index.insert(h);
    } else {
      uf.unite(it->second, i);
    }
  }
  for (const auto& [h, i] : first) {
    for (PHash64 near : index.query(h, max_distance)) uf.unite(i, first.at(near));
  }
}

/// Candidate pairs come from an inverted index over shingles: a pair with no
/// shared shingle has Jaccard 0 and can never pass a positive threshold.
inline void link_texts(std::span<const FingerprintedMessage* const> items,
                       const Thresholds& thresholds, UnionFind& uf) {
  // Exact normalized equality.
  std::map<std::string_view, std::size_t> by_text;
  std::vector<std::size_t> distinct;  // one index per distinct normalized text
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& tf = std::get<TextFingerprint>(items[i]->fingerprint.value);
    auto [it, inserted] = by_text.emplace(tf.normalized, i);
    if (inserted) {
      distinct.push_back(i);
    } else {
      uf.unite(it->second, i);
    }
  }

  // Intern shingles of texts large enough for Jaccard matching.
  std::unordered_map<std::string_view, std::size_t> shingle_ids;
  std::vector<std::vector<std::size_t>> postings;      // shingle id -> positions in `eligible`
  std::vector<std::vector<std::size_t>> eligible_ids;  // per eligible text: its shingle ids
  std::vector<std::size_t> eligible;                   // item indices
  for (std::size_t i : distinct) {
    const auto& tf = std::get<TextFingerprint>(items[i]->fingerprint.value);
    if (tf.shingles.size() < thresholds.text_min_shingles) continue;
    std::size_t pos = eligible.size();
    eligible.push_back(i);
    auto& ids = eligible_ids.emplace_back();
    ids.reserve(tf.shingles.size());
    for (const auto& sh : tf.shingles.shingles) {
      auto [it, inserted] = shingle_ids.emplace(sh, postings.size());
      if (inserted) postings.emplace_back();
      postings[it->second].push_back(pos);
      ids.push_back(it->second);
    }
  }

  std::vector<std::size_t> overlap(eligible.size(), 0);
  std::vector<std::size_t> touched;
  for (std::size_t a = 0; a < eligible.size(); ++a) {
    touched.clear();
    for (std::size_t sid : eligible_ids[a]) {
      for (std::size_t b : postings[sid]) {
        if (b <= a) continue;
        if (overlap[b]++ == 0) touched.push_back(b);
      }
    }
    const std::size_t size_a = eligible_ids[a].size();
    for (std::size_t b : touched) {
      const std::size_t common = overlap[b];
      overlap[b] = 0;
      const std::size_t unite_size = size_a + eligible_ids[b].size() - common;
      const double similarity = static_cast<double>(common) / static_cast<double>(unite_size);
      if (similarity >= thresholds.text_jaccard) uf.unite(eligible[a], eligible[b]);
    }
  }
}

}  // namespace detail

struct ClusterSet {
  std::vector<ContentCluster> clusters;  // sorted by cluster_id
};

/// Builds the cluster partition of `messages`. Output does not depend on the
/// input order.
inline ClusterSet build_clusters(std::span<const FingerprintedMessage> messages,
                                 const Thresholds& thresholds) {
  // Sort by key so union-find sees a canonical order.
  std::vector<const FingerprintedMessage*> ordered;
  ordered.reserve(messages.size());
  for (const auto& m : messages) {
    if (m.message == nullptr) throw Error("fingerprinted message without message");
    if (m.message->media_kind != m.fingerprint.kind) {
      throw Error("fingerprint kind does not match message kind");
    }
    ordered.push_back(&m);
  }
  std::sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) {
    return a->message->key() < b->message->key();
  });

  ClusterSet out;
  for (MediaKind kind : kAllMediaKinds) {
    std::vector<const FingerprintedMessage*> items;
    for (const auto* m : ordered) {
      if (m->fingerprint.kind == kind) items.push_back(m);
    }
    if (items.empty()) continue;

    UnionFind uf(items.size());
    switch (kind) {
      case MediaKind::image: detail::link_images(items, thresholds.image_hamming, uf); break;
      case MediaKind::text: detail::link_texts(items, thresholds, uf); break;
      default: detail::link_checksums(items, uf); break;
    }

    std::map<std::size_t, std::vector<std::size_t>> components;
    for (std::size_t i = 0; i < items.size(); ++i) components[uf.find(i)].push_back(i);

    for (const auto& [_, idx] : components) {
      ContentCluster c;
      c.kind = kind;
      std::string smallest;
      const FingerprintedMessage* first = nullptr;
      std::set<std::string_view> chats;
      std::set<Pseudonym> senders;
      for (std::size_t i : idx) {
        const auto* fm = items[i];
        const RawMessage& msg = *fm->message;
        std::string hex = fm->fingerprint.hex();
        if (smallest.empty() || hex < smallest) smallest = hex;
        if (first == nullptr || earlier(msg, *first->message)) first = fm;
        chats.insert(msg.chat_id);
        senders.insert(msg.sender);
        c.members.push_back(ClusterMember{msg.key(), std::move(hex)});
      }
      c.cluster_id = make_cluster_id(kind, smallest);
      if (kind == MediaKind::text) {
        c.representative_text = std::get<TextFingerprint>(first->fingerprint.value).normalized;
      } else {
        c.representative_blob = first->message->media_ref;
      }
      c.share_count = idx.size();
      c.distinct_groups = chats.size();
      c.distinct_senders = senders.size();
      c.first_seen = first->message->sent_at;
      c.last_seen = first->message->sent_at;
      for (std::size_t i : idx) c.last_seen = std::max(c.last_seen, items[i]->message->sent_at);
      // members already follow key order because `items` does.
      out.clusters.push_back(std::move(c));
    }
  }
  std::sort(out.clusters.begin(), out.clusters.end(),
            [](const auto& a, const auto& b) { return a.cluster_id < b.cluster_id; });
  return out;
}

// ---------------------------------------------------------------------------
// Lookup and counters

/// Messages addressable by (chat_id, msg_id). Does not own the messages.
class MessageIndex {
 public:
  explicit MessageIndex(std::span<const RawMessage> messages) : messages_(messages) {
    for (std::size_t i = 0; i < messages.size(); ++i) by_key_.emplace(messages[i].key(), i);
  }

  const RawMessage* find(const MessageKey& key) const {
    auto it = by_key_.find(key);
    return it == by_key_.end() ? nullptr : &messages_[it->second];
  }

  const RawMessage& at(const MessageKey& key) const {
    const RawMessage* m = find(key);
    if (m == nullptr) {
      throw IntegrityError("dangling member reference (" + key.chat_id + ", " + key.msg_id + ")");
    }
    return *m;
  }

  std::span<const RawMessage> messages() const { return messages_; }

 private:
  std::span<const RawMessage> messages_;
  std::map<MessageKey, std::size_t> by_key_;
};

struct ClusterStats {
  std::size_t share_count = 0;
  std::size_t distinct_groups = 0;
  std::size_t distinct_senders = 0;
  std::vector<std::string> group_titles;  // sorted, unique

  friend bool operator==(const ClusterStats&, const ClusterStats&) = default;
};

/// Counters over the cluster's members, optionally restricted to members
/// sent inside `period`.
inline ClusterStats cluster_stats(const ContentCluster& cluster, const MessageIndex& messages,
                                  const ChatRegistry& registry,
                                  std::optional<Period> period = std::nullopt) {
  ClusterStats s;
  std::set<std::string_view> chats;
  std::set<Pseudonym> senders;
  for (const auto& member : cluster.members) {
    const RawMessage& m = messages.at(member.key);
    if (period && !period->contains(m.sent_at)) continue;
    ++s.share_count;
    chats.insert(m.chat_id);
    senders.insert(m.sender);
  }
  s.distinct_groups = chats.size();
  s.distinct_senders = senders.size();
  std::set<std::string> titles;
  for (auto chat : chats) titles.insert(registry.title_of(chat));
  s.group_titles.assign(titles.begin(), titles.end());
  return s;
}

// ---------------------------------------------------------------------------
// Persisted form (one cluster per JSON line)

inline json to_json(const ContentCluster& c) {
  json members = json::array();
  for (const auto& m : c.members) {
    members.push_back(
        json{{"chat_id", m.key.chat_id}, {"msg_id", m.key.msg_id}, {"fingerprint", m.fingerprint}});
  }
  json rep;
  if (c.representative_blob) {
    rep["blob"] = json{{"checksum", c.representative_blob->checksum.hex()},
                       {"size_bytes", c.representative_blob->size_bytes},
                       {"media_kind", to_string(c.representative_blob->media_kind)}};
  }
  if (c.representative_text) rep["text"] = *c.representative_text;
  return json{{"cluster_id", c.cluster_id},
              {"kind", to_string(c.kind)},
              {"representative", rep},
              {"members", members},
              {"share_count", c.share_count},
              {"distinct_groups", c.distinct_groups},
              {"distinct_senders", c.distinct_senders},
              {"first_seen", format_timestamp(c.first_seen)},
              {"last_seen", format_timestamp(c.last_seen)}};
}

inline ContentCluster content_cluster_from_json(const json& j) {
  ContentCluster c;
  try {
    c.cluster_id = j.at("cluster_id").get<std::string>();
    auto kind = parse_media_kind(j.at("kind").get<std::string>());
    if (!kind) throw DataError("cluster " + c.cluster_id + ": bad kind");
    c.kind = *kind;
    const json& rep = j.at("representative");
    if (rep.contains("blob")) {
      const json& b = rep.at("blob");
      auto sum = Checksum128::from_hex(b.at("checksum").get<std::string>());
      auto bkind = parse_media_kind(b.at("media_kind").get<std::string>());
      if (!sum || !bkind) throw DataError("cluster " + c.cluster_id + ": bad representative");
      c.representative_blob = BlobRef{*sum, b.at("size_bytes").get<std::uint64_t>(), *bkind};
    }
    if (rep.contains("text")) c.representative_text = rep.at("text").get<std::string>();
    for (const auto& m : j.at("members")) {
      c.members.push_back(ClusterMember{
          MessageKey{m.at("chat_id").get<std::string>(), m.at("msg_id").get<std::string>()},
          m.at("fingerprint").get<std::string>()});
    }
    c.share_count = j.at("share_count").get<std::size_t>();
    c.distinct_groups = j.at("distinct_groups").get<std::size_t>();
    c.distinct_senders = j.at("distinct_senders").get<std::size_t>();
    auto first = parse_rfc3339_utc(j.at("first_seen").get<std::string>());
    auto last = parse_rfc3339_utc(j.at("last_seen").get<std::string>());
    if (!first || !last) throw DataError("cluster " + c.cluster_id + ": bad timestamps");
    c.first_seen = *first;
    c.last_seen = *last;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed cluster: ") + e.what());
  }
  if (c.share_count != c.members.size() || c.share_count == 0 ||
      c.distinct_groups > c.share_count || c.distinct_senders > c.share_count ||
      c.first_seen > c.last_seen) {
    throw DataError("cluster " + c.cluster_id + ": inconsistent counters");
  }
  return c;
}

}  // namespace tgmon
