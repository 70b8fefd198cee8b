// Acceptance suite: one PASS/FAIL line per primary criterion. Exit status is
// the number of failed criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "../gen.hpp"
#include "../oracles.hpp"
#include "../test_util.hpp"
#include "tgmon/api.hpp"
#include "tgmon/config.hpp"
#include "tgmon/fixture.hpp"
#include "tgmon/pipeline.hpp"

using namespace tgmon;
using namespace std::chrono;
namespace fs = std::filesystem;

namespace {

/// First failed requirement wins; `notes` collects measurements for the report.
struct Outcome {
  bool ok = true;
  std::string failure;
  std::ostringstream notes;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      failure = what;
    }
  }
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

/// A generated fixture after `ingest` and `process`.
struct PreparedFixture {
  fs::path root;
  FixtureManifest manifest;
  Config config;
  double pipeline_seconds = 0;

  fs::path dataset() const { return root / "ds"; }
};

PreparedFixture prepare(const fs::path& root, std::uint64_t seed, std::size_t messages) {
  PreparedFixture p{root, generate_fixture({root / "fx", seed, messages}), {}, 0};
  p.config = load_config(root / "fx" / "monitor.conf");
  auto t0 = steady_clock::now();
  ingest_directory(root / "fx" / "exports", p.dataset(), p.config.pseudonymizer());
  process_dataset(p.dataset(), p.config.thresholds);
  p.pipeline_seconds = duration<double>(steady_clock::now() - t0).count();
  return p;
}

void ac1_planted_recovery(const PreparedFixture& fx, Outcome& out) {
  auto data = load_snapshot(fx.dataset());
  std::map<MessageKey, std::string> cluster_of;
  for (const auto& c : data.clusters) {
    for (const auto& m : c.members) cluster_of[m.key] = c.cluster_id;
  }
  std::vector<std::pair<std::string, std::string>> items;  // (planted label, cluster)
  std::set<std::string> originals;
  for (const auto& l : fx.manifest.labels) {
    if (l.kind != MediaKind::image || l.undecodable) continue;
    auto it = cluster_of.find(l.key);
    out.require(it != cluster_of.end(), "decodable image message missing from clusters");
    if (it == cluster_of.end()) return;
    items.emplace_back(l.label, it->second);
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      bool planted = items[i].first == items[j].first;
      bool merged = items[i].second == items[j].second;
      tp += planted && merged;
      fp += !planted && merged;
      fn += planted && !merged;
    }
  }
  double precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 1.0;
  double recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 1.0;
  out.notes << items.size() << " images, " << tp + fn << " planted pairs, precision " << fmt(precision)
            << ", recall " << fmt(recall) << ", ingest+process " << fmt(fx.pipeline_seconds, 1) << " s";
  out.require(fx.manifest.messages == 10000, "fixture is not 10,000 messages");
  out.require(tp + fn > 0, "no planted pairs");
  out.require(precision >= 0.99, "precision below 0.99");
  out.require(recall >= 0.95, "recall below 0.95");
  out.require(fx.pipeline_seconds < 120.0, "ingest+process took 120 s or more");
}

bool same_clusters(const std::vector<ContentCluster>& a, const std::vector<ContentCluster>& b) { return a == b; }

void compare_rankings(const ContentCatalog& catalog, const std::vector<RawMessage>& messages,
                      const std::vector<ContentCluster>& clusters, Date first, int days, std::uint64_t seed,
                      Outcome& out) {
  synth::Rng rng(seed);
  std::size_t nonempty = 0;
  for (int q = 0; q < 20; ++q) {
    Date a = first + std::chrono::days{rng.below(static_cast<std::uint64_t>(days))};
    Date b = first + std::chrono::days{rng.below(static_cast<std::uint64_t>(days))};
    if (b < a) std::swap(a, b);
    auto kind = kAllMediaKinds[rng.below(kAllMediaKinds.size())];
    auto limit = static_cast<std::size_t>(rng.between(1, 60));
    auto got = top_content(catalog, Period{a, b}, kind, limit);
    auto want = oracle::recount_top(messages, clusters, a, b, kind, limit);
    nonempty += !want.empty();
    out.require(got == want, "top_content differs from recount for " + format_date(a) + ".." + format_date(b) +
                                 " kind " + std::string(to_string(kind)));
  }
  out.require(nonempty >= 10, "too few non-empty ranking queries");
}

void ac2_oracle_equivalence(const fs::path& tmp, Outcome& out) {
  // The generated 1,000-message fixture, fingerprinted from its blobs.
  auto fx = prepare(tmp, 7, 1000);
  auto data = load_snapshot(fx.dataset());
  BlobStore blobs(fx.dataset() / "blobs");
  BlobReader read = [&blobs](const BlobRef& ref) { return blobs.get_blob(ref); };
  std::vector<FingerprintedMessage> ok;
  for (const auto& m : data.messages) {
    auto r = fingerprint_message(m, read);
    if (auto* fp = std::get_if<Fingerprint>(&r)) ok.push_back({&m, *fp});
  }
  auto fast = build_clusters(ok, fx.config.thresholds).clusters;
  auto slow = oracle::brute_force_clusters(ok, fx.config.thresholds);
  out.require(same_clusters(fast, slow), "fixture: build_clusters differs from all-pairs oracle");
  out.require(same_clusters(data.clusters, slow), "fixture: persisted clusters differ from oracle");
  ContentCatalog catalog(data.registry, data.messages, data.clusters);
  compare_rankings(catalog, data.messages, data.clusters, Date{sys_days{2021y / February / 22}}, 28, 2021, out);

  // A random corpus with denser near-duplicate chains.
  synth::Rng rng(1000);
  auto corpus = gen::random_corpus(rng, 1000);
  auto items = corpus.fingerprinted();
  auto rfast = build_clusters(items, Thresholds{}).clusters;
  auto rslow = oracle::brute_force_clusters(items, Thresholds{});
  out.require(same_clusters(rfast, rslow), "random corpus: build_clusters differs from all-pairs oracle");
  ContentCatalog rcat(corpus.registry, corpus.messages, rfast);
  compare_rankings(rcat, corpus.messages, rfast, Date{sys_days{2021y / March / 1}}, 21, 77, out);

  out.notes << "fixture " << fast.size() << " clusters, random corpus " << rfast.size()
            << " clusters, identical partitions and counters; 40 ranking queries match recount";
}

void ac3_members_cdf(Outcome& out) {
  synth::Rng rng(232);
  ChatRegistry reg;
  std::vector<std::int64_t> counts;
  for (int i = 0; i < 153; ++i) counts.push_back(i == 0 ? 257 : static_cast<std::int64_t>(rng.between(257, 200000)));
  for (int i = 0; i < 79; ++i) counts.push_back(i == 0 ? 256 : static_cast<std::int64_t>(rng.between(1, 256)));
  for (std::size_t i = 0; i < counts.size(); ++i) {
    reg.register_chat({"c" + std::to_string(i), i % 4 ? ChatKind::group : ChatKind::channel,
                       "chat " + std::to_string(i), counts[i], {}});
  }
  auto cdf = members_cdf(reg, std::nullopt);
  double above = fraction_above(cdf, 256);
  double want = 153.0 / 232.0;
  out.notes << "fraction above 256 = " << fmt(above, 9) << " (expected " << fmt(want, 9) << ")";
  out.require(reg.size() == 232, "registry size is not 232");
  out.require(std::abs(above - want) <= 1e-9, "fraction above 256 outside 1e-9 of 153/232");
  out.require(!cdf.empty() && cdf.back().fraction == 1.0, "CDF does not end at 1");
}

void ac4_weekly_shape(Outcome& out) {
  synth::Rng rng(2020);
  std::vector<Timestamp> times;
  auto add_week = [&](IsoWeek w, int rate) {
    // Weekly totals jitter by up to 2% around the nominal rate.
    auto n = static_cast<std::uint64_t>(rate * (0.98 + 0.04 * rng.unit()));
    Timestamp start{iso_week_start(w)};
    for (std::uint64_t i = 0; i < n; ++i) times.push_back(start + seconds{rng.below(7 * 86400)});
  };
  for (unsigned w = 1; w <= 53; ++w) add_week({2020, w}, 20000);
  for (unsigned w = 1; w <= 10; ++w) add_week({2021, w}, 80000);
  auto series = weekly_volume_of(times);
  double sum2020 = 0, sum2021 = 0;
  int n2020 = 0, n2021 = 0;
  std::size_t total = 0;
  for (const auto& w : series) {
    total += w.count;
    if (w.week.year == 2020) sum2020 += static_cast<double>(w.count), ++n2020;
    if (w.week.year == 2021) sum2021 += static_cast<double>(w.count), ++n2021;
  }
  double ratio = (sum2021 / n2021) / (sum2020 / n2020);
  out.notes << times.size() << " messages, " << series.size() << " weeks, plateau ratio " << fmt(ratio, 3);
  out.require(total == times.size(), "weekly counts do not sum to the message count");
  out.require(n2020 == 53 && n2021 == 10, "unexpected week coverage");
  out.require(std::abs(ratio - 4.0) <= 0.1, "plateau ratio outside 4.0 +/- 0.1");
}

void ac5_fingerprints(Outcome& out) {
  const std::pair<const char*, const char*> rfc1321[] = {
      {"", "d41d8cd98f00b204e9800998ecf8427e"},
      {"a", "0cc175b9c0f1b6a831c399e269772661"},
      {"abc", "900150983cd24fb0d6963f7d28e17f72"},
      {"message digest", "f96b697d7cb7938d525a2f31aaf161d0"},
      {"abcdefghijklmnopqrstuvwxyz", "c3fcd3d76192e4007dfb496cca67e13b"},
      {"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789", "d174ab98d277d9f5a5611c2c9f419d9f"},
      {"12345678901234567890123456789012345678901234567890123456789012345678901234567890",
       "57edf4a22be3c955ac49da2e2107b67a"}};
  for (const auto& [in, hex] : rfc1321) out.require(to_hex(md5_digest(std::string_view(in))) == hex, "MD5 vector");

  synth::Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    PHash64 a{rng.next()}, b{rng.next()}, c{rng.next()};
    int ab = hamming(a, b);
    out.require(ab == oracle::bitwise_hamming(a.bits, b.bits), "hamming differs from bitwise count");
    out.require(ab == hamming(b, a) && hamming(a, a) == 0 && (ab == 0) == (a == b), "hamming symmetry/identity");
    out.require(ab >= 0 && ab <= 64 && hamming(a, c) <= ab + hamming(b, c), "hamming range/triangle");
  }

  auto s1 = text_shingles("um dois tres quatro cinco");
  auto s2 = text_shingles("seis sete oito nove dez");
  auto half_a = text_shingles("a b c d");     // {a b c, b c d}
  auto half_b = text_shingles("a b c d e f");  // adds c d e, d e f
  out.require(jaccard(s1, s1) == 1.0, "jaccard identity");
  out.require(jaccard(s1, s2) == 0.0, "jaccard disjoint");
  out.require(jaccard(half_a, half_b) == 0.5, "jaccard 0.5 case");
  out.require(jaccard(ShingleSet{}, ShingleSet{}) == 1.0, "jaccard of empty sets");

  for (int v : {0, 1, 77, 128, 255}) {
    for (auto [w, h, c] : {std::tuple{32, 32, 1}, std::tuple{100, 37, 3}, std::tuple{1, 1, 3}}) {
      Image img(w, h, c);
      std::fill(img.pixels.begin(), img.pixels.end(), static_cast<std::uint8_t>(v));
      out.require(phash64(img).bits == 0, "constant image does not hash to 0");
    }
  }

  const fs::path dir = fs::path(TGMON_TEST_DATA) / "corpus";
  auto expected = nlohmann::json::parse(read_text(dir / "expected.json"));
  std::vector<PHash64> originals;
  int worst_near = 0;
  for (const auto& [name, e] : expected.items()) {
    auto text = read_text(dir / name);
    auto img = decode_image(std::vector<std::uint8_t>(text.begin(), text.end()));
    out.require(img.has_value(), "corpus image does not decode: " + name);
    if (!img) continue;
    auto h = phash64(*img);
    out.require(h.hex() == e.at("phash").get<std::string>(), "corpus hash changed: " + name);
    auto small = resize_bilinear(*img, static_cast<int>(std::lround(img->width * 0.8)),
                                 static_cast<int>(std::lround(img->height * 0.8)));
    auto jpeg = decode_image(encode_jpeg(*img, 75));
    out.require(jpeg.has_value(), "JPEG round trip failed");
    if (!jpeg) continue;
    int d = std::max(hamming(h, phash64(small)), hamming(h, phash64(*jpeg)));
    worst_near = std::max(worst_near, d);
    originals.push_back(h);
  }
  int closest = 64;
  for (std::size_t i = 0; i < originals.size(); ++i) {
    for (std::size_t j = i + 1; j < originals.size(); ++j) closest = std::min(closest, hamming(originals[i], originals[j]));
  }
  out.notes << originals.size() << " corpus images, max near-duplicate distance " << worst_near
            << ", min distinct distance " << closest;
  out.require(originals.size() == 20, "corpus does not hold 20 images");
  out.require(worst_near <= 10, "near-duplicate distance above 10");
  out.require(closest >= 20, "distinct distance below 20");
}

/// Every occurrence of a needle in `body` is found by checking each window
/// of the right length that starts a run of the needle's alphabet.
std::size_t count_identities(const std::string& body, const std::set<std::string>& raw,
                             const std::set<std::string>& pseudonyms) {
  std::size_t hits = 0;
  for (const auto& id : raw) {
    if (body.find(id) != std::string::npos) ++hits;
  }
  auto is_hex = [](char ch) { return (ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'f'); };
  for (std::size_t i = 0; i + 32 <= body.size(); ++i) {
    if (!is_hex(body[i])) continue;
    std::size_t j = i;
    while (j < body.size() && is_hex(body[j])) ++j;
    for (std::size_t k = i; k + 32 <= j; ++k) hits += pseudonyms.count(body.substr(k, 32));
    i = j;
  }
  return hits;
}

void ac6_privacy(const PreparedFixture& fx, Outcome& out) {
  auto sessions = std::make_shared<SessionManager>(AccountStore::load(fx.config.accounts_file),
                                                   seconds{fx.config.token_ttl_seconds});
  auto snap = LoadedSnapshot::load(fx.dataset());
  ApiService service(snap, sessions, ApiSettings{fx.config.cors_origin, fx.config.public_media_base_url});
  httplib::Server server;
  service.mount(server);
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);

  auto login = client.Post(
      "/api/login",
      nlohmann::json{{"username", kFixtureUsername}, {"password", kFixturePassword}}.dump(), "application/json");
  out.require(login && login->status == 200, "login failed");
  std::string token = login && login->status == 200 ? nlohmann::json::parse(login->body)["token"].get<std::string>() : "";
  httplib::Headers auth = {{"Authorization", "Bearer " + token}};

  std::vector<std::string> paths = {"/api/stats/members_cdf", "/api/stats/members_cdf?kind=group",
                                    "/api/stats/members_cdf?kind=channel", "/api/stats/weekly_volume"};
  const Date first{sys_days{2021y / February / 22}};
  for (auto kind : kAllMediaKinds) {
    std::string k(to_string(kind));
    paths.push_back("/api/top?from=2021-02-22&to=2021-03-21&limit=200&kind=" + k);
    for (int d = 0; d < 28; ++d) {
      paths.push_back("/api/top?from=" + format_date(first + days{d}) + "&limit=200&kind=" + k);
    }
  }
  for (const auto& c : snap->data.clusters) {
    paths.push_back("/api/content/" + c.cluster_id);
    if (c.representative_blob) paths.push_back("/api/media/" + c.representative_blob->checksum.hex());
  }

  std::set<std::string> raw(fx.manifest.sender_ids.begin(), fx.manifest.sender_ids.end());
  // Pseudonyms of every input sender, whether or not it sent a valid message.
  std::set<std::string> pseudonyms;
  const auto pseudo = fx.config.pseudonymizer();
  for (const auto& id : raw) pseudonyms.insert(pseudo(id).value());
  std::size_t unknown_senders = 0;
  for (const auto& m : snap->data.messages) unknown_senders += !pseudonyms.count(m.sender.value());

  const std::string planted = R"({"x":")" + *raw.begin() + R"(","y":"ab)" + *pseudonyms.rbegin() + "\"}";
  out.require(count_identities(planted, raw, pseudonyms) == 2, "scanner misses planted identities");

  std::size_t hits = 0, bytes = 0, failed = 0, unauthenticated_ok = 0;
  for (const auto& p : paths) {
    auto r = client.Get(p, auth);
    if (!r || r->status != 200) {
      ++failed;
      continue;
    }
    bytes += r->body.size();
    hits += count_identities(r->body, raw, pseudonyms);
  }
  std::vector<std::string> guarded = {"/api/top?from=2021-03-01", "/api/stats/members_cdf", "/api/stats/weekly_volume",
                                      "/api/content/" + snap->data.clusters.front().cluster_id};
  if (auto b = snap->data.clusters.front().representative_blob) guarded.push_back("/api/media/" + b->checksum.hex());
  for (const auto& p : guarded) {
    auto r = client.Get(p);
    unauthenticated_ok += !(r && r->status == 401);
  }
  server.stop();
  th.join();

  out.notes << paths.size() << " responses, " << bytes << " bytes scanned for " << raw.size() << " sender ids and "
            << pseudonyms.size() << " pseudonyms: " << hits << " occurrences; " << guarded.size()
            << " routes checked without token";
  out.require(!raw.empty() && unknown_senders == 0, "stored senders are not pseudonyms of input senders");
  out.require(failed == 0, "some authenticated requests failed");
  out.require(hits == 0, "sender identity found in an API response");
  out.require(unauthenticated_ok == 0, "a route answered without a token");
}

void ac7_persistence(const PreparedFixture& fx, const fs::path& tmp, Outcome& out) {
  const char* files[] = {"meta.json", "registry.json", "messages.jsonl", "clusters.jsonl"};
  auto loaded = load_snapshot(fx.dataset());
  snapshot(loaded, tmp);
  std::size_t compared = 0;
  for (const char* f : files) {
    auto a = read_text(fx.dataset() / f);
    auto b = read_text(tmp / f);
    out.require(a == b, std::string(f) + " differs after snapshot -> load -> snapshot");
    compared += a.size();
  }
  std::set<Checksum128> distinct;
  for (const auto& m : loaded.messages) {
    if (m.media_ref) distinct.insert(m.media_ref->checksum);
  }
  BlobStore blobs(fx.dataset() / "blobs");
  out.notes << compared << " bytes identical; " << blobs.file_count() << " blob files, " << distinct.size()
            << " distinct checksums";
  out.require(loaded.messages.size() == 10000, "dataset is not 10,000 messages");
  out.require(blobs.file_count() == distinct.size(), "blob file count differs from distinct checksums");
}

}  // namespace

int main() {
  TempDir tmp;
  const std::pair<const char*, const char*> names[] = {
      {"AC1", "planted-duplicate recovery"}, {"AC2", "oracle equivalence"},
      {"AC3", "members CDF above 256"},      {"AC4", "weekly volume plateau"},
      {"AC5", "fingerprint unit suite"},     {"AC6", "privacy"},
      {"AC7", "persistence"}};
  Outcome outcomes[7];

  std::optional<PreparedFixture> big;
  auto run = [&](int i, const std::function<void(Outcome&)>& f) {
    try {
      f(outcomes[i]);
    } catch (const std::exception& e) {
      outcomes[i].require(false, std::string("exception: ") + e.what());
    }
  };
  auto need_big = [&](Outcome& o) -> const PreparedFixture* {
    if (!big) {
      try {
        big = prepare(tmp / "fixture10k", 11, 10000);
      } catch (const std::exception& e) {
        o.require(false, std::string("fixture: ") + e.what());
        return nullptr;
      }
    }
    return &*big;
  };

  run(0, [&](Outcome& o) { if (auto* fx = need_big(o)) ac1_planted_recovery(*fx, o); });
  run(1, [&](Outcome& o) { ac2_oracle_equivalence(tmp / "fixture1k", o); });
  run(2, ac3_members_cdf);
  run(3, ac4_weekly_shape);
  run(4, ac5_fingerprints);
  run(5, [&](Outcome& o) { if (auto* fx = need_big(o)) ac6_privacy(*fx, o); });
  run(6, [&](Outcome& o) { if (auto* fx = need_big(o)) ac7_persistence(*fx, tmp / "resnapshot", o); });

  int failed = 0;
  for (int i = 0; i < 7; ++i) {
    const auto& o = outcomes[i];
    failed += !o.ok;
    std::cout << names[i].first << " " << (o.ok ? "PASS" : "FAIL") << "  " << names[i].second << ": "
              << o.notes.str();
    if (!o.ok) std::cout << " [" << o.failure << "]";
    std::cout << "\n";
  }
  return failed;
}
