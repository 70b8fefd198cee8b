#pragma once

// Independent reference implementations used only by tests. Each one is
// written differently from the library code it checks: OpenSSL for MD5,
// direct summation for the DCT, std::regex for invite links, all-pairs
// comparison plus breadth-first closure for clustering, a message scan for
// ranking counters and a calendar formula for ISO weeks.

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <queue>
#include <regex>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "tgmon/cluster.hpp"
#include "tgmon/hex.hpp"
#include "tgmon/image.hpp"
#include "tgmon/rank_stats.hpp"
#include "tgmon/time.hpp"

namespace oracle {

inline std::string openssl_md5(const void* data, std::size_t size) {
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data, size, out, &len, EVP_md5(), nullptr);
  return tgmon::to_hex(std::span<const std::uint8_t>(out, len));
}

inline int bitwise_hamming(std::uint64_t a, std::uint64_t b) {
  int n = 0;
  for (int i = 0; i < 64; ++i) n += ((a >> i) & 1) != ((b >> i) & 1);
  return n;
}

/// Perceptual hash by direct evaluation of every formula.
inline std::uint64_t naive_phash(const tgmon::Image& img) {
  const int W = img.width, H = img.height;
  std::vector<double> gray(static_cast<std::size_t>(W * H));
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double g = img.channels == 1 ? img.at(x, y, 0)
                                   : 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
      gray[static_cast<std::size_t>(y * W + x)] = g;
    }
  }
  auto px = [&](int x, int y) { return gray[static_cast<std::size_t>(y * W + x)]; };
  double grid[32][32];
  for (int i = 0; i < 32; ++i) {
    double sy = H == 1 ? 0.0 : i * (H - 1) / 31.0;
    int y0 = static_cast<int>(std::floor(sy));
    int y1 = std::min(y0 + 1, H - 1);
    double fy = sy - y0;
    for (int j = 0; j < 32; ++j) {
      double sx = W == 1 ? 0.0 : j * (W - 1) / 31.0;
      int x0 = static_cast<int>(std::floor(sx));
      int x1 = std::min(x0 + 1, W - 1);
      double fx = sx - x0;
      grid[i][j] = (1 - fx) * (1 - fy) * px(x0, y0) + fx * (1 - fy) * px(x1, y0) +
                   (1 - fx) * fy * px(x0, y1) + fx * fy * px(x1, y1);
    }
  }
  double coef[8][8];
  for (int u = 0; u < 8; ++u) {
    for (int v = 0; v < 8; ++v) {
      double s = 0;
      for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 32; ++x) {
          s += grid[y][x] * std::cos(std::numbers::pi * (2 * y + 1) * u / 64.0) *
               std::cos(std::numbers::pi * (2 * x + 1) * v / 64.0);
        }
      }
      double au = u == 0 ? std::sqrt(1.0 / 32) : std::sqrt(2.0 / 32);
      double av = v == 0 ? std::sqrt(1.0 / 32) : std::sqrt(2.0 / 32);
      coef[u][v] = au * av * s;
    }
  }
  double mean = 0;
  for (int i = 1; i < 64; ++i) mean += coef[i / 8][i % 8];
  mean /= 63;
  std::uint64_t bits = 0;
  // The DC position is never set (constant images must hash to zero).
  for (int i = 1; i < 64; ++i) {
    if (coef[i / 8][i % 8] > mean) bits |= std::uint64_t{1} << (63 - i);
  }
  return bits;
}

struct RegexLink {
  std::string url;
  std::string key;
};

inline std::vector<RegexLink> regex_invite_links(const std::string& text) {
  static const std::regex re(R"(https://(?:t\.me/joinchat/|telegram\.me/)([A-Za-z0-9_-]+))");
  std::vector<RegexLink> out;
  for (std::sregex_iterator it(text.begin(), text.end(), re), end; it != end; ++it) {
    out.push_back({it->str(0), it->str(1)});
  }
  return out;
}

inline double set_jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::vector<std::string> inter, uni;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(inter));
  std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(uni));
  return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

inline bool similar(const tgmon::Fingerprint& a, const tgmon::Fingerprint& b, const tgmon::Thresholds& t) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case tgmon::MediaKind::image:
      return bitwise_hamming(std::get<tgmon::PHash64>(a.value).bits, std::get<tgmon::PHash64>(b.value).bits) <=
             t.image_hamming;
    case tgmon::MediaKind::text: {
      const auto& ta = std::get<tgmon::TextFingerprint>(a.value);
      const auto& tb = std::get<tgmon::TextFingerprint>(b.value);
      if (ta.normalized == tb.normalized) return true;
      if (ta.shingles.size() < t.text_min_shingles || tb.shingles.size() < t.text_min_shingles) return false;
      return set_jaccard(ta.shingles.shingles, tb.shingles.shingles) >= t.text_jaccard;
    }
    default:
      return std::get<tgmon::Checksum128>(a.value) == std::get<tgmon::Checksum128>(b.value);
  }
}

/// All-pairs similarity graph, connected components by BFS.
inline std::vector<tgmon::ContentCluster> brute_force_clusters(
    const std::vector<tgmon::FingerprintedMessage>& items, const tgmon::Thresholds& t) {
  const std::size_t n = items.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (similar(items[i].fingerprint, items[j].fingerprint, t)) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
    }
  }
  std::vector<bool> seen(n, false);
  std::vector<tgmon::ContentCluster> out;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::vector<std::size_t> comp;
    std::queue<std::size_t> q;
    q.push(s);
    seen[s] = true;
    while (!q.empty()) {
      auto v = q.front();
      q.pop();
      comp.push_back(v);
      for (auto w : adj[v]) {
        if (!seen[w]) {
          seen[w] = true;
          q.push(w);
        }
      }
    }
    tgmon::ContentCluster c;
    c.kind = items[s].fingerprint.kind;
    std::set<std::string> chats, senders, hexes;
    const tgmon::RawMessage* first = nullptr;
    for (auto i : comp) {
      const auto& m = *items[i].message;
      hexes.insert(items[i].fingerprint.hex());
      chats.insert(m.chat_id);
      senders.insert(m.sender.value());
      c.members.push_back({m.key(), items[i].fingerprint.hex()});
      if (!first || std::make_tuple(m.sent_at, m.chat_id, m.msg_id) <
                        std::make_tuple(first->sent_at, first->chat_id, first->msg_id)) {
        first = &m;
      }
    }
    std::sort(c.members.begin(), c.members.end(),
              [](const auto& a, const auto& b) { return a.key < b.key; });
    c.cluster_id = std::string(tgmon::to_string(c.kind)) + "-" + *hexes.begin();
    c.share_count = comp.size();
    c.distinct_groups = chats.size();
    c.distinct_senders = senders.size();
    c.first_seen = first->sent_at;
    c.last_seen = first->sent_at;
    for (auto i : comp) c.last_seen = std::max(c.last_seen, items[i].message->sent_at);
    if (c.kind == tgmon::MediaKind::text) {
      for (auto i : comp) {
        if (items[i].message == first) {
          c.representative_text = std::get<tgmon::TextFingerprint>(items[i].fingerprint.value).normalized;
        }
      }
    } else {
      c.representative_blob = first->media_ref;
    }
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.cluster_id < b.cluster_id; });
  return out;
}

/// Ranking by rescanning every message of every cluster.
inline std::vector<tgmon::RankingEntry> recount_top(const std::vector<tgmon::RawMessage>& messages,
                                                    const std::vector<tgmon::ContentCluster>& clusters,
                                                    tgmon::Date from, tgmon::Date to, tgmon::MediaKind kind,
                                                    std::size_t limit) {
  std::map<std::pair<std::string, std::string>, const tgmon::RawMessage*> by_key;
  for (const auto& m : messages) by_key[{m.chat_id, m.msg_id}] = &m;
  struct Row {
    std::size_t shares, groups, senders;
    tgmon::Timestamp first;
    std::string id;
  };
  std::vector<Row> rows;
  for (const auto& c : clusters) {
    if (c.kind != kind) continue;
    std::set<std::string> chats, senders;
    std::size_t shares = 0;
    for (const auto& member : c.members) {
      const auto* m = by_key.at({member.key.chat_id, member.key.msg_id});
      auto day = std::chrono::floor<std::chrono::days>(m->sent_at);
      if (day < from || day > to) continue;
      ++shares;
      chats.insert(m->chat_id);
      senders.insert(m->sender.value());
    }
    if (shares) rows.push_back({shares, chats.size(), senders.size(), c.first_seen, c.cluster_id});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    // Negate the descending keys so one lexicographic tuple compare suffices.
    auto key = [](const Row& r) {
      return std::make_tuple(-static_cast<long long>(r.shares), -static_cast<long long>(r.groups),
                             -static_cast<long long>(r.senders), r.first, r.id);
    };
    return key(a) < key(b);
  });
  std::vector<tgmon::RankingEntry> out;
  for (std::size_t i = 0; i < rows.size() && i < limit; ++i) {
    out.push_back({i + 1, rows[i].id, rows[i].shares, rows[i].groups, rows[i].senders});
  }
  return out;
}

/// ISO-8601 week by the ordinal-date formula.
inline std::pair<int, unsigned> iso_week(tgmon::Date d) {
  using namespace std::chrono;
  year_month_day ymd{d};
  int y = static_cast<int>(ymd.year());
  int ordinal = (d - sys_days{ymd.year() / January / 1}).count() + 1;
  int wd = static_cast<int>(weekday{d}.iso_encoding());
  auto weeks_in = [](int yr) {
    auto p = [](int z) { return (z + z / 4 - z / 100 + z / 400) % 7; };
    return (p(yr) == 4 || p(yr - 1) == 3) ? 53 : 52;
  };
  int w = (ordinal - wd + 10) / 7;
  if (w < 1) return {y - 1, static_cast<unsigned>(weeks_in(y - 1))};
  if (w > weeks_in(y)) return {y + 1, 1u};
  return {y, static_cast<unsigned>(w)};
}

}  // namespace oracle
