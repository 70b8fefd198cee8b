#pragma once

// Seeded synthetic corpus with planted duplicates and a ground-truth
// manifest.
//
//   <out>/exports/registry.json        chat registry
//   <out>/exports/<chat_id>.jsonl      one export per chat, sorted by sent_at
//   <out>/exports/media/...            payload files referenced by media_path
//   <out>/monitor.conf, secret.key, accounts.json
//   <out>/manifest.json                labels, expected counts, test account
//
// Planted structure: image originals (PNG) each re-shared 3..10 times as
// rescaled and/or JPEG-recompressed copies; unique images; a few
// undecodable "images"; exact-duplicate video/audio/document payloads; text
// clusters whose variants differ by case, punctuation, Unicode composition,
// emoji or one edited trailing word. A handful of malformed and duplicated
// export lines are added on top of the requested message count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "tgmon/auth.hpp"
#include "tgmon/error.hpp"
#include "tgmon/image.hpp"
#include "tgmon/ingest.hpp"
#include "tgmon/store.hpp"
#include "tgmon/synth.hpp"
#include "tgmon/time.hpp"

namespace tgmon {

struct FixtureOptions {
  std::filesystem::path out;
  std::uint64_t seed = 7;
  std::size_t messages = 1000;
};

inline constexpr std::string_view kFixtureUsername = "analyst";
inline constexpr std::string_view kFixturePassword = "fixture-password";

/// Ground truth for one generated message.
struct FixtureLabel {
  MessageKey key;
  MediaKind kind = MediaKind::text;
  std::string label;  // equal labels = same planted content
  bool undecodable = false;
};

struct FixtureManifest {
  std::uint64_t seed = 0;
  std::size_t messages = 0;
  std::size_t invalid_lines = 0;
  std::size_t duplicate_lines = 0;
  std::size_t fingerprint_failures = 0;
  std::map<std::string, std::size_t> expected_clusters;  // per kind
  std::vector<FixtureLabel> labels;
  std::vector<std::string> sender_ids;  // raw identifiers, for privacy scans
  std::string first_day;
  std::string last_day;

  nlohmann::json to_json() const {
    nlohmann::json labels_json = nlohmann::json::array();
    for (const auto& l : labels) {
      labels_json.push_back({l.key.chat_id, l.key.msg_id, to_string(l.kind), l.label, l.undecodable});
    }
    return {{"seed", seed},
            {"messages", messages},
            {"invalid_lines", invalid_lines},
            {"duplicate_lines", duplicate_lines},
            {"fingerprint_failures", fingerprint_failures},
            {"expected_clusters", expected_clusters},
            {"labels", labels_json},
            {"sender_ids", sender_ids},
            {"first_day", first_day},
            {"last_day", last_day},
            {"account", {{"username", kFixtureUsername}, {"password", kFixturePassword}}}};
  }

  static FixtureManifest from_json(const nlohmann::json& j) {
    FixtureManifest m;
    m.seed = j.at("seed");
    m.messages = j.at("messages");
    m.invalid_lines = j.at("invalid_lines");
    m.duplicate_lines = j.at("duplicate_lines");
    m.fingerprint_failures = j.at("fingerprint_failures");
    m.expected_clusters = j.at("expected_clusters").get<std::map<std::string, std::size_t>>();
    for (const auto& l : j.at("labels")) {
      m.labels.push_back(FixtureLabel{MessageKey{l[0], l[1]}, *parse_media_kind(l[2].get<std::string>()),
                                      l[3], l[4]});
    }
    m.sender_ids = j.at("sender_ids").get<std::vector<std::string>>();
    m.first_day = j.at("first_day");
    m.last_day = j.at("last_day");
    return m;
  }

  static FixtureManifest load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read manifest " + path.string());
    return from_json(nlohmann::json::parse(in));
  }
};

namespace detail {

struct PlannedMessage {
  MediaKind kind = MediaKind::text;
  std::string label;
  std::optional<std::string> text;
  std::vector<std::uint8_t> payload;
  std::string extension;
  bool undecodable = false;
};

inline void write_bytes(const std::filesystem::path& p, std::span<const std::uint8_t> bytes) {
  write_file_atomic(p, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

inline std::vector<std::uint8_t> random_payload(synth::Rng& rng, std::string_view magic,
                                                std::size_t offset) {
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(rng.between(1500, 6000)));
  for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.below(256));
  std::copy(magic.begin(), magic.end(), bytes.begin() + static_cast<std::ptrdiff_t>(offset));
  return bytes;
}

/// One of the "re-shared copy" transformations, chosen by copy index.
inline std::vector<std::uint8_t> image_copy(const Image& original, std::size_t index,
                                            std::string& extension) {
  const int w = static_cast<int>(std::lround(original.width * 0.8));
  const int h = static_cast<int>(std::lround(original.height * 0.8));
  switch (index % 4) {
    case 0:
      extension = ".jpg";
      return encode_jpeg(resize_bilinear(original, w, h), 75);
    case 1:
      extension = ".jpg";
      return encode_jpeg(original, 75);
    case 2: {
      // A copy of a copy: rescaled, recompressed, decoded and recompressed.
      extension = ".jpg";
      auto first = decode_image(encode_jpeg(resize_bilinear(original, w, h), 75));
      return encode_jpeg(*first, 75);
    }
    default:
      extension = ".png";
      return encode_png(resize_bilinear(original, w, h));
  }
}

inline std::string compose_text(synth::Rng& rng, const std::vector<std::string>& vocab,
                                std::size_t words) {
  std::string s;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) s += ' ';
    s += rng.pick(vocab);
  }
  return s;
}

/// Decomposes a few precomposed Portuguese letters (NFD form).
inline std::string decompose(std::string s) {
  static const std::pair<std::string_view, std::string_view> kMap[] = {
      {"ã", "a\xcc\x83"}, {"ç", "c\xcc\xa7"}, {"á", "a\xcc\x81"}, {"é", "e\xcc\x81"},
      {"ê", "e\xcc\x82"}, {"ó", "o\xcc\x81"}};
  for (auto [from, to] : kMap) {
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
      s.replace(pos, from.size(), to);
    }
  }
  return s;
}

inline std::string shout(const std::string& s) {
  std::string out;
  for (char c : s) out.push_back((c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c);
  return out;
}

/// A variant of `base` that stays within the text duplicate threshold.
inline std::string text_variant(synth::Rng& rng, const std::vector<std::string>& vocab,
                                const std::string& base, std::size_t op) {
  switch (op % 6) {
    case 0: return base;
    case 1: return shout(base) + "!!!";
    case 2: return base + " " + rng.pick(vocab);
    case 3: {
      auto cut = base.rfind(' ');
      return base.substr(0, cut) + " " + rng.pick(vocab);
    }
    case 4: return decompose(base);
    default: return "\xf0\x9f\x94\xa5 " + base + ", \xe2\x9d\xa4\xef\xb8\x8f";  // 🔥 … ❤️
  }
}

}  // namespace detail

inline FixtureManifest generate_fixture(const FixtureOptions& opt) {
  using namespace std::chrono;
  namespace fs = std::filesystem;
  if (opt.messages < 100) throw DataError("fixture needs at least 100 messages");
  synth::Rng rng(opt.seed);
  const std::size_t M = opt.messages;
  const fs::path exports = opt.out / "exports";
  fs::create_directories(exports / "media");

  // Chats.
  ChatRegistry registry;
  const std::size_t n_chats = std::clamp<std::size_t>(M / 40, 4, 232);
  static const std::vector<std::string> kTitleA = {"Grupo", "Canal", "Movimento", "Frente",
                                                   "Notícias", "Patriotas", "Aliança", "Coletivo"};
  static const std::vector<std::string> kTitleB = {"Brasil", "Verdade", "Liberdade", "Nação",
                                                   "Povo", "Futuro", "Resistência", "Esperança"};
  std::vector<std::string> chat_ids;
  const Timestamp joined = sys_days{2021y / January / 15};
  for (std::size_t i = 0; i < n_chats; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "chat-%04zu", i + 1);
    ChatRecord r;
    r.chat_id = id;
    r.kind = rng.chance(0.3) ? ChatKind::channel : ChatKind::group;
    r.title = rng.pick(kTitleA) + " " + rng.pick(kTitleB) + " " + std::to_string(i + 1);
    const double hi = r.kind == ChatKind::group ? std::log(200000.0) : std::log(2000000.0);
    r.member_count = static_cast<std::int64_t>(std::exp(rng.uniform(std::log(30.0), hi)));
    r.joined_at = joined;
    registry.register_chat(r);
    chat_ids.push_back(r.chat_id);
  }

  // Senders: phone-number-like identifiers.
  std::vector<std::string> senders;
  std::set<std::string> sender_set;
  while (senders.size() < std::max<std::size_t>(8, M / 6)) {
    char id[32];
    std::snprintf(id, sizeof id, "+55%02d9%08llu", static_cast<int>(rng.between(11, 99)),
                  static_cast<unsigned long long>(rng.below(100000000)));
    if (sender_set.insert(id).second) senders.emplace_back(id);
  }

  // Content plan.
  std::vector<detail::PlannedMessage> plan;
  auto add = [&](detail::PlannedMessage m) { plan.push_back(std::move(m)); };

  const std::size_t n_originals = std::max<std::size_t>(2, M / 50);
  for (std::size_t i = 0; i < n_originals; ++i) {
    const std::string label = "image-" + std::to_string(i);
    Image original = synth::smooth_image(rng, static_cast<int>(rng.between(96, 160)),
                                          static_cast<int>(rng.between(96, 160)));
    add({MediaKind::image, label, std::nullopt, encode_png(original), ".png"});
    const auto copies = static_cast<std::size_t>(rng.between(3, 10));
    for (std::size_t c = 0; c < copies; ++c) {
      std::string ext;
      auto bytes = detail::image_copy(original, c, ext);
      add({MediaKind::image, label, std::nullopt, std::move(bytes), ext});
    }
  }
  const std::size_t n_single_images = std::max<std::size_t>(1, n_originals / 4);
  for (std::size_t i = 0; i < n_single_images; ++i) {
    Image img = synth::smooth_image(rng, static_cast<int>(rng.between(96, 160)),
                                    static_cast<int>(rng.between(96, 160)));
    std::optional<std::string> caption;
    if (rng.chance(0.3)) caption = "olha isso";
    add({MediaKind::image, "image-single-" + std::to_string(i), caption, encode_jpeg(img, 85), ".jpg"});
  }
  const std::size_t n_bad = std::max<std::size_t>(1, M / 2000);
  for (std::size_t i = 0; i < n_bad; ++i) {
    add({MediaKind::image, "image-broken-" + std::to_string(i), std::nullopt,
         detail::random_payload(rng, "GIF89a", 0), ".gif", true});
  }

  struct MediaSpec {
    MediaKind kind;
    std::string_view magic;
    std::size_t offset;
    std::string_view ext;
  };
  for (const MediaSpec& spec : {MediaSpec{MediaKind::video, "ftypisom", 4, ".mp4"},
                                MediaSpec{MediaKind::audio, "OggS", 0, ".ogg"},
                                MediaSpec{MediaKind::document, "%PDF-1.4", 0, ".pdf"}}) {
    const std::size_t n_clusters = std::max<std::size_t>(2, M / 100);
    for (std::size_t i = 0; i < n_clusters; ++i) {
      auto payload = detail::random_payload(rng, spec.magic, spec.offset);
      const auto copies = static_cast<std::size_t>(rng.between(1, 5));
      for (std::size_t c = 0; c < copies; ++c) {
        add({spec.kind, std::string(to_string(spec.kind)) + "-" + std::to_string(i), std::nullopt,
             payload, std::string(spec.ext)});
      }
    }
  }
  if (plan.size() > M) throw DataError("message budget too small for the media plan");

  // Text fills the rest of the budget.
  const auto vocab = synth::vocabulary(rng, 3000);
  std::set<std::string> short_token_sets;
  std::size_t text_cluster = 0;
  while (plan.size() < M) {
    const std::string label = "text-" + std::to_string(text_cluster++);
    const std::size_t room = M - plan.size();
    auto size = static_cast<std::size_t>(rng.chance(0.5) ? 1 : rng.between(2, 6));
    size = std::min(size, room);
    if (rng.chance(0.8)) {
      const std::string base = detail::compose_text(rng, vocab, static_cast<std::size_t>(rng.between(8, 25)));
      add({MediaKind::text, label, base, {}, {}});
      for (std::size_t v = 1; v < size; ++v) {
        add({MediaKind::text, label, detail::text_variant(rng, vocab, base, rng.below(6)), {}, {}});
      }
    } else {
      std::string base;
      std::string key;
      do {
        auto words = static_cast<std::size_t>(rng.between(1, 2));
        std::vector<std::string> w;
        for (std::size_t i = 0; i < words; ++i) w.push_back(rng.pick(vocab));
        base = w[0] + (words == 2 ? " " + w[1] : "");
        std::sort(w.begin(), w.end());
        key = w[0] + (words == 2 ? " " + w[1] : "");
      } while (!short_token_sets.insert(key).second);
      add({MediaKind::text, label, base, {}, {}});
      for (std::size_t v = 1; v < size; ++v) {
        std::string variant = v % 2 ? detail::shout(base) + "?" : "..." + base;
        add({MediaKind::text, label, variant, {}, {}});
      }
    }
  }

  // Placement in chats and time: four weeks starting Monday 2021-02-22.
  const Date first_day = sys_days{2021y / February / 22};
  constexpr std::int64_t kSpanSeconds = 28LL * 86400;
  struct Placed {
    std::size_t plan_index;
    std::size_t chat;
    std::size_t sender;
    Timestamp sent_at;
  };
  std::vector<Placed> placed;
  placed.reserve(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) {
    placed.push_back(Placed{i, static_cast<std::size_t>(rng.below(chat_ids.size())),
                            static_cast<std::size_t>(rng.below(senders.size())),
                            Timestamp{first_day} + seconds{rng.between(0, kSpanSeconds - 1)}});
  }
  std::sort(placed.begin(), placed.end(), [](const Placed& a, const Placed& b) {
    return std::tie(a.chat, a.sent_at, a.plan_index) < std::tie(b.chat, b.sent_at, b.plan_index);
  });

  FixtureManifest manifest;
  manifest.seed = opt.seed;
  manifest.messages = M;
  manifest.first_day = format_date(first_day);
  manifest.last_day = format_date(first_day + days{27});
  manifest.sender_ids = senders;

  std::map<std::size_t, std::vector<std::string>> lines_per_chat;
  std::map<std::size_t, std::size_t> next_id;
  for (const auto& p : placed) {
    auto& m = plan[p.plan_index];
    const std::string chat_id = chat_ids[p.chat];
    const std::string msg_id = std::to_string(++next_id[p.chat]);
    nlohmann::json line{{"msg_id", msg_id},
                        {"chat_id", chat_id},
                        {"sender_id", senders[p.sender]},
                        {"sent_at", format_timestamp(p.sent_at)},
                        {"media_kind", to_string(m.kind)}};
    if (m.text) line["text"] = *m.text;
    if (m.kind != MediaKind::text) {
      const std::string rel = "media/" + chat_id + "-" + msg_id + m.extension;
      detail::write_bytes(exports / rel, m.payload);
      line["media_path"] = rel;
    }
    lines_per_chat[p.chat].push_back(line.dump());
    manifest.labels.push_back(FixtureLabel{MessageKey{chat_id, msg_id}, m.kind, m.label, m.undecodable});
  }

  // Noise lines: malformed records and repeated records.
  manifest.invalid_lines = std::max<std::size_t>(1, M / 1000);
  for (std::size_t i = 0; i < manifest.invalid_lines; ++i) {
    auto& lines = lines_per_chat[static_cast<std::size_t>(rng.below(chat_ids.size()))];
    const std::string chat = "chat-noise";
    switch (i % 3) {
      case 0:
        lines.push_back(R"({"msg_id":"x)" + std::to_string(i) + R"(","chat_id":")" + chat +
                        R"(","sender_id":"+550000000000","media_kind":"text","text":"sem data"})");
        break;
      case 1:
        lines.push_back(R"({"msg_id":"y)" + std::to_string(i) + R"(","chat_id":")" + chat +
                        R"(","sender_id":"+550000000000","sent_at":"2021-03-01T10:00:00-03:00","media_kind":"text","text":"hora local"})");
        break;
      default: lines.push_back(R"({"msg_id": "z", "chat_id": )"); break;
    }
  }
  manifest.duplicate_lines = std::max<std::size_t>(1, M / 1000);
  for (std::size_t i = 0; i < manifest.duplicate_lines; ++i) {
    auto it = lines_per_chat.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(rng.below(lines_per_chat.size())));
    auto& lines = it->second;
    // Repeat a genuine record (index below the noise appended above).
    std::size_t genuine = next_id.count(it->first) ? next_id.at(it->first) : 0;
    if (genuine == 0) {
      --i;
      continue;
    }
    lines.push_back(lines[static_cast<std::size_t>(rng.below(genuine))]);
  }

  for (const auto& [chat, lines] : lines_per_chat) {
    std::string body;
    for (const auto& l : lines) body += l + "\n";
    detail::write_file_atomic(exports / (chat_ids[chat] + ".jsonl"), body);
  }
  detail::write_file_atomic(exports / "registry.json", registry.to_json().dump(2) + "\n");

  // Expected clusters per kind.
  std::map<std::string, std::set<std::string>> labels_per_kind;
  for (const auto& l : manifest.labels) {
    if (l.undecodable) {
      ++manifest.fingerprint_failures;
      continue;
    }
    labels_per_kind[std::string(to_string(l.kind))].insert(l.label);
  }
  for (MediaKind k : kAllMediaKinds) {
    manifest.expected_clusters[std::string(to_string(k))] = labels_per_kind[std::string(to_string(k))].size();
  }

  // Operator files.
  std::vector<std::uint8_t> secret(32);
  for (auto& b : secret) b = static_cast<std::uint8_t>(rng.below(256));
  detail::write_file_atomic(opt.out / "secret.key", to_hex(secret) + "\n");
  std::vector<std::uint8_t> salt(16);
  for (auto& b : salt) b = static_cast<std::uint8_t>(rng.below(256));
  AccountStore accounts;
  accounts.add(Account{std::string(kFixtureUsername), make_password_digest(kFixturePassword, salt),
                       joined});
  detail::write_file_atomic(opt.out / "accounts.json", accounts.to_json().dump(2) + "\n");
  detail::write_file_atomic(opt.out / "monitor.conf",
                    "# generated fixture configuration\n"
                    "pseudonym_secret_file = secret.key\n"
                    "accounts_file = accounts.json\n"
                    "image_hamming_threshold = 10\n"
                    "text_jaccard_threshold = 0.7\n"
                    "bind = 127.0.0.1:8080\n"
                    "cors_origin = http://localhost:5173\n"
                    "token_ttl_seconds = 3600\n");
  detail::write_file_atomic(opt.out / "manifest.json", manifest.to_json().dump(1) + "\n");
  return manifest;
}

}  // namespace tgmon
