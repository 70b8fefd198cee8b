#pragma once

// Per-period popularity rankings and the aggregate statistics series
// (members CDF, weekly message volume).

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tgmon/cluster.hpp"
#include "tgmon/error.hpp"
#include "tgmon/ingest.hpp"
#include "tgmon/time.hpp"

namespace tgmon {

struct RankingEntry {
  std::size_t rank = 0;  // 1-based
  std::string cluster_id;
  std::size_t period_share_count = 0;
  std::size_t period_distinct_groups = 0;
  std::size_t period_distinct_senders = 0;

  friend bool operator==(const RankingEntry&, const RankingEntry&) = default;
};

/// Spread details of one cluster within a period.
struct ContentDetails {
  std::string cluster_id;
  MediaKind kind = MediaKind::text;
  Period period;
  std::size_t share_count = 0;
  std::size_t distinct_groups = 0;
  std::size_t distinct_senders = 0;
  std::vector<std::string> group_titles;
  std::optional<BlobRef> representative_blob;
  std::optional<std::string> representative_text;
  std::optional<std::string> reverse_search_url;  // images only
};

/// RFC 3986 percent-encoding; unreserved characters pass through.
inline std::string url_encode(std::string_view s) {
  static constexpr char kDigits[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' ||
        c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kDigits[c >> 4]);
      out.push_back(kDigits[c & 0x0f]);
    }
  }
  return out;
}

/// Built only; never fetched.
inline std::string reverse_image_search_url(std::string_view public_media_url) {
  return "https://lens.google.com/uploadbyurl?url=" + url_encode(public_media_url);
}

/// Read-only view over a dataset's registry, messages and clusters, with the
/// per-member data needed to re-slice counters by period. Immutable after
/// construction and safe to share between threads.
class ContentCatalog {
 public:
  ContentCatalog(const ChatRegistry& registry, std::span<const RawMessage> messages,
                 std::span<const ContentCluster> clusters)
      : registry_(registry), messages_(messages), clusters_(clusters) {
    std::unordered_map<std::string_view, std::uint32_t> chat_ids;
    std::unordered_map<std::string_view, std::uint32_t> sender_ids;
    auto intern = [](auto& table, std::string_view key) {
      return table.emplace(key, static_cast<std::uint32_t>(table.size())).first->second;
    };

    members_.resize(clusters.size());
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      by_id_.emplace(clusters[c].cluster_id, c);
      auto& rows = members_[c];
      rows.reserve(clusters[c].members.size());
      for (const auto& member : clusters[c].members) {
        const RawMessage& m = messages_.at(member.key);
        rows.push_back(Member{day_of(m.sent_at), intern(chat_ids, m.chat_id),
                              intern(sender_ids, m.sender.value())});
      }
      std::sort(rows.begin(), rows.end(),
                [](const Member& a, const Member& b) { return a.day < b.day; });
    }
  }

  const ChatRegistry& registry() const { return registry_; }
  const MessageIndex& messages() const { return messages_; }
  std::span<const ContentCluster> clusters() const { return clusters_; }

  const ContentCluster* find(std::string_view cluster_id) const {
    auto it = by_id_.find(std::string(cluster_id));
    return it == by_id_.end() ? nullptr : &clusters_[it->second];
  }

  struct PeriodCounts {
    std::size_t shares = 0;
    std::size_t groups = 0;
    std::size_t senders = 0;
  };

  PeriodCounts period_counts(std::size_t cluster_index, const Period& period) const {
    const auto& rows = members_[cluster_index];
    auto lo = std::lower_bound(rows.begin(), rows.end(), period.start,
                               [](const Member& m, Date d) { return m.day < d; });
    auto hi = std::upper_bound(rows.begin(), rows.end(), period.end,
                               [](Date d, const Member& m) { return d < m.day; });
    PeriodCounts out;
    if (lo == hi) return out;
    std::vector<std::uint32_t> chats, senders;
    for (auto it = lo; it != hi; ++it) {
      chats.push_back(it->chat);
      senders.push_back(it->sender);
    }
    out.shares = static_cast<std::size_t>(hi - lo);
    out.groups = count_distinct(chats);
    out.senders = count_distinct(senders);
    return out;
  }

  std::size_t index_of(const ContentCluster& c) const {
    return static_cast<std::size_t>(&c - clusters_.data());
  }

 private:
  struct Member {
    Date day;
    std::uint32_t chat;
    std::uint32_t sender;
  };

  static std::size_t count_distinct(std::vector<std::uint32_t>& v) {
    std::sort(v.begin(), v.end());
    return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
  }

  const ChatRegistry& registry_;
  MessageIndex messages_;
  std::span<const ContentCluster> clusters_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
  std::vector<std::vector<Member>> members_;
};

/// Ranking order: more in-period shares first, then more groups, then more
/// senders, then earlier first appearance, then cluster id.
inline bool ranks_before(const RankingEntry& a, Timestamp a_first_seen, const RankingEntry& b,
                         Timestamp b_first_seen) {
  if (a.period_share_count != b.period_share_count) {
    return a.period_share_count > b.period_share_count;
  }
  if (a.period_distinct_groups != b.period_distinct_groups) {
    return a.period_distinct_groups > b.period_distinct_groups;
  }
  if (a.period_distinct_senders != b.period_distinct_senders) {
    return a.period_distinct_senders > b.period_distinct_senders;
  }
  if (a_first_seen != b_first_seen) return a_first_seen < b_first_seen;
  return a.cluster_id < b.cluster_id;
}

inline std::vector<RankingEntry> top_content(const ContentCatalog& catalog, const Period& period,
                                             MediaKind kind, std::size_t limit) {
  if (!period.valid()) throw RequestError("period start is after its end");
  if (limit < 1) throw RequestError("limit must be at least 1");

  struct Candidate {
    RankingEntry entry;
    Timestamp first_seen;
  };
  std::vector<Candidate> candidates;
  auto clusters = catalog.clusters();
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (clusters[i].kind != kind) continue;
    auto counts = catalog.period_counts(i, period);
    if (counts.shares == 0) continue;
    candidates.push_back(Candidate{
        RankingEntry{0, clusters[i].cluster_id, counts.shares, counts.groups, counts.senders},
        clusters[i].first_seen});
  }
  auto before = [](const Candidate& a, const Candidate& b) {
    return ranks_before(a.entry, a.first_seen, b.entry, b.first_seen);
  };
  if (candidates.size() > limit) {
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(limit),
                      candidates.end(), before);
    candidates.resize(limit);
  } else {
    std::sort(candidates.begin(), candidates.end(), before);
  }

  std::vector<RankingEntry> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out.push_back(std::move(candidates[i].entry));
    out.back().rank = i + 1;
  }
  return out;
}

/// `public_media_base` is prefixed to the blob checksum to form the URL a
/// reverse image search would be pointed at.
inline ContentDetails content_details(const ContentCatalog& catalog, std::string_view cluster_id,
                                      const Period& period, std::string_view public_media_base) {
  if (!period.valid()) throw RequestError("period start is after its end");
  const ContentCluster* c = catalog.find(cluster_id);
  if (c == nullptr) throw NotFoundError("unknown cluster '" + std::string(cluster_id) + "'");
  ClusterStats stats = cluster_stats(*c, catalog.messages(), catalog.registry(), period);

  ContentDetails d;
  d.cluster_id = c->cluster_id;
  d.kind = c->kind;
  d.period = period;
  d.share_count = stats.share_count;
  d.distinct_groups = stats.distinct_groups;
  d.distinct_senders = stats.distinct_senders;
  d.group_titles = std::move(stats.group_titles);
  d.representative_blob = c->representative_blob;
  d.representative_text = c->representative_text;
  if (c->kind == MediaKind::image && c->representative_blob) {
    d.reverse_search_url = reverse_image_search_url(std::string(public_media_base) +
                                                     c->representative_blob->checksum.hex());
  }
  return d;
}

// ---------------------------------------------------------------------------
// Statistics series

struct CdfPoint {
  std::int64_t member_count = 0;
  double fraction = 0.0;

  friend bool operator==(const CdfPoint&, const CdfPoint&) = default;
};

/// Empirical CDF of member counts, one point per distinct count. The last
/// fraction is exactly 1.
inline std::vector<CdfPoint> members_cdf(const ChatRegistry& registry,
                                         std::optional<ChatKind> kind = std::nullopt) {
  std::vector<std::int64_t> counts;
  for (const auto& r : registry.records()) {
    if (!kind || r.kind == *kind) counts.push_back(r.member_count);
  }
  if (counts.empty()) throw RequestError("members CDF of an empty registry");
  std::sort(counts.begin(), counts.end());
  std::vector<CdfPoint> out;
  const double total = static_cast<double>(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i + 1 < counts.size() && counts[i + 1] == counts[i]) continue;
    out.push_back(CdfPoint{counts[i], static_cast<double>(i + 1) / total});
  }
  return out;
}

/// Fraction of chats with member_count strictly above `threshold`.
inline double fraction_above(std::span<const CdfPoint> cdf, std::int64_t threshold) {
  double at_or_below = 0.0;
  for (const auto& p : cdf) {
    if (p.member_count <= threshold) at_or_below = p.fraction;
  }
  return 1.0 - at_or_below;
}

struct WeekCount {
  IsoWeek week;
  std::size_t count = 0;

  friend bool operator==(const WeekCount&, const WeekCount&) = default;
};

/// Message counts per ISO week, ascending, with empty weeks inside the
/// observed range reported as 0.
inline std::vector<WeekCount> weekly_volume_of(std::span<const Timestamp> sent_at) {
  std::map<IsoWeek, std::size_t> buckets;
  for (Timestamp t : sent_at) ++buckets[iso_week_of(day_of(t))];
  std::vector<WeekCount> out;
  if (buckets.empty()) return out;
  const IsoWeek last = buckets.rbegin()->first;
  for (IsoWeek w = buckets.begin()->first; w <= last; w = next_iso_week(w)) {
    auto it = buckets.find(w);
    out.push_back(WeekCount{w, it == buckets.end() ? 0 : it->second});
  }
  return out;
}

inline std::vector<WeekCount> weekly_volume(std::span<const RawMessage> messages) {
  std::vector<Timestamp> times;
  times.reserve(messages.size());
  for (const auto& m : messages) times.push_back(m.sent_at);
  return weekly_volume_of(times);
}

}  // namespace tgmon
