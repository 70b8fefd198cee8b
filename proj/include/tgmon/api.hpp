#pragma once

// Authenticated read-only HTTP API over a loaded dataset snapshot.
//
//   POST /api/login                     {"username","password"} -> {"token","expires_at"}
//   GET  /api/top?from&to&kind&limit    ranking for a period and media kind
//   GET  /api/content/{cluster_id}?from&to
//   GET  /api/media/{checksum}          blob bytes, immutable caching
//   GET  /api/stats/members_cdf[?kind=group|channel]
//   GET  /api/stats/weekly_volume
//
// Every route except login needs `Authorization: Bearer <token>`. Errors are
// `{"code": ..., "message": ...}`. Sender identities never leave the server,
// not even pseudonymized; only distinct-sender counts do.

#include <atomic>
#include <charconv>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "httplib.h"
#include "json.hpp"

#include "tgmon/auth.hpp"
#include "tgmon/error.hpp"
#include "tgmon/rank_stats.hpp"
#include "tgmon/store.hpp"

namespace tgmon {

/// A dataset plus the indexes built over it. Neither copyable nor movable:
/// the catalog points into `data`.
class LoadedSnapshot {
 public:
  LoadedSnapshot(Dataset d, std::filesystem::path blob_root)
      : data(std::move(d)),
        blobs(std::move(blob_root)),
        catalog(data.registry, data.messages, data.clusters) {}

  LoadedSnapshot(const LoadedSnapshot&) = delete;
  LoadedSnapshot& operator=(const LoadedSnapshot&) = delete;

  static std::shared_ptr<const LoadedSnapshot> load(const std::filesystem::path& dataset_dir) {
    return std::make_shared<const LoadedSnapshot>(load_snapshot(dataset_dir), dataset_dir / "blobs");
  }

  const Dataset data;
  const BlobStore blobs;
  const ContentCatalog catalog;
};

struct ApiSettings {
  std::string cors_origin = "http://localhost:5173";
  std::string public_media_base_url = "http://127.0.0.1:8080/api/media/";
};

inline std::string media_content_type(std::span<const std::uint8_t> b) {
  auto starts = [&](std::size_t off, std::string_view magic) {
    return b.size() >= off + magic.size() &&
           std::equal(magic.begin(), magic.end(), b.begin() + static_cast<std::ptrdiff_t>(off),
                      [](char c, std::uint8_t u) { return static_cast<std::uint8_t>(c) == u; });
  };
  switch (sniff_image_format(b)) {
    case ImageFormat::png: return "image/png";
    case ImageFormat::jpeg: return "image/jpeg";
    case ImageFormat::unknown: break;
  }
  if (starts(0, "GIF87a") || starts(0, "GIF89a")) return "image/gif";
  if (starts(4, "ftyp")) return "video/mp4";
  if (starts(0, "\x1a\x45\xdf\xa3")) return "video/webm";
  if (starts(0, "OggS")) return "audio/ogg";
  if (starts(0, "ID3")) return "audio/mpeg";
  if (starts(0, "%PDF")) return "application/pdf";
  return "application/octet-stream";
}

class ApiService {
 public:
  ApiService(std::shared_ptr<const LoadedSnapshot> snapshot, std::shared_ptr<SessionManager> sessions,
             ApiSettings settings)
      : snapshot_(std::move(snapshot)), sessions_(std::move(sessions)), settings_(std::move(settings)) {}

  /// Swaps in a new snapshot; requests already running keep the old one.
  void reload(std::shared_ptr<const LoadedSnapshot> snapshot) {
    std::atomic_store(&snapshot_, std::move(snapshot));
  }

  std::shared_ptr<const LoadedSnapshot> snapshot() const { return std::atomic_load(&snapshot_); }

  void mount(httplib::Server& server) {
    server.set_default_headers({{"Access-Control-Allow-Origin", settings_.cors_origin},
                                {"Access-Control-Allow-Headers", "Authorization, Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Vary", "Origin"}});

    server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (req.method == "OPTIONS") {
        res.status = 204;
        return httplib::Server::HandlerResponse::Handled;
      }
      if (req.path == "/api/login") return httplib::Server::HandlerResponse::Unhandled;
      switch (sessions_->check(bearer_token(req))) {
        case TokenStatus::ok: return httplib::Server::HandlerResponse::Unhandled;
        case TokenStatus::missing: error(res, 401, "unauthorized", "missing bearer token"); break;
        case TokenStatus::invalid: error(res, 401, "invalid_token", "unknown token"); break;
        case TokenStatus::expired: error(res, 401, "token_expired", "token expired"); break;
      }
      return httplib::Server::HandlerResponse::Handled;
    });

    server.Post("/api/login", [this](const auto& req, auto& res) { login(req, res); });
    server.Get("/api/top", [this](const auto& req, auto& res) { guarded(res, [&] { top(req, res); }); });
    server.Get(R"(/api/content/([A-Za-z0-9_-]+))",
               [this](const auto& req, auto& res) { guarded(res, [&] { content(req, res); }); });
    server.Get(R"(/api/media/([0-9a-f]{32}))",
               [this](const auto& req, auto& res) { guarded(res, [&] { media(req, res); }); });
    server.Get("/api/stats/members_cdf",
               [this](const auto& req, auto& res) { guarded(res, [&] { members(req, res); }); });
    server.Get("/api/stats/weekly_volume",
               [this](const auto& req, auto& res) { guarded(res, [&] { weekly(req, res); }); });

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        error(res, res.status, res.status == 404 ? "not_found" : "error", httplib::status_message(res.status));
      }
    });
  }

  // Response bodies, exposed for callers that bypass HTTP.

  nlohmann::json top_json(const Period& period, MediaKind kind, std::size_t limit) const {
    auto snap = snapshot();
    auto entries = top_content(snap->catalog, period, kind, limit);
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries) {
      const ContentCluster& c = *snap->catalog.find(e.cluster_id);
      arr.push_back({{"rank", e.rank},
                     {"cluster_id", e.cluster_id},
                     {"kind", to_string(c.kind)},
                     {"period_share_count", e.period_share_count},
                     {"period_distinct_groups", e.period_distinct_groups},
                     {"period_distinct_senders", e.period_distinct_senders},
                     {"preview", preview_json(c)}});
    }
    return arr;
  }

  nlohmann::json content_json(std::string_view cluster_id, std::optional<Period> period) const {
    auto snap = snapshot();
    const ContentCluster* c = snap->catalog.find(cluster_id);
    if (c == nullptr) throw NotFoundError("unknown cluster '" + std::string(cluster_id) + "'");
    Period p = period.value_or(Period{day_of(c->first_seen), day_of(c->last_seen)});
    auto d = content_details(snap->catalog, cluster_id, p, settings_.public_media_base_url);
    nlohmann::json j{{"cluster_id", d.cluster_id},
                     {"kind", to_string(d.kind)},
                     {"from", format_date(d.period.start)},
                     {"to", format_date(d.period.end)},
                     {"share_count", d.share_count},
                     {"distinct_groups", d.distinct_groups},
                     {"distinct_senders", d.distinct_senders},
                     {"group_titles", d.group_titles},
                     {"first_seen", format_timestamp(c->first_seen)},
                     {"last_seen", format_timestamp(c->last_seen)},
                     {"representative", preview_json(*c)}};
    if (d.reverse_search_url) j["reverse_search_url"] = *d.reverse_search_url;
    return j;
  }

  nlohmann::json members_cdf_json(std::optional<ChatKind> kind) const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : members_cdf(snapshot()->data.registry, kind)) {
      arr.push_back({{"member_count", p.member_count}, {"fraction", p.fraction}});
    }
    return arr;
  }

  nlohmann::json weekly_volume_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& w : weekly_volume(snapshot()->data.messages)) {
      arr.push_back({{"week", format_iso_week(w.week)},
                     {"start", format_date(iso_week_start(w.week))},
                     {"count", w.count}});
    }
    return arr;
  }

 private:
  static std::string bearer_token(const httplib::Request& req) {
    std::string h = req.get_header_value("Authorization");
    constexpr std::string_view kPrefix = "Bearer ";
    if (h.size() <= kPrefix.size() || h.compare(0, kPrefix.size(), kPrefix) != 0) return {};
    return h.substr(kPrefix.size());
  }

  static void error(httplib::Response& res, int status, std::string_view code,
                    std::string_view message) {
    res.status = status;
    res.set_content(nlohmann::json{{"code", code}, {"message", message}}.dump(), "application/json");
  }

  static void send(httplib::Response& res, const nlohmann::json& body) {
    res.status = 200;
    res.set_content(body.dump(), "application/json");
  }

  template <typename Fn>
  static void guarded(httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const RequestError& e) {
      error(res, 400, "bad_request", e.what());
    } catch (const NotFoundError& e) {
      error(res, 404, "not_found", e.what());
    } catch (const std::exception& e) {
      error(res, 500, "internal", e.what());
    }
  }

  static std::optional<std::string> param(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) return std::nullopt;
    return req.get_param_value(name);
  }

  static Date date_param(const std::string& name, const std::string& value) {
    auto d = parse_date(value);
    if (!d) throw RequestError(name + " must be a YYYY-MM-DD date");
    return *d;
  }

  /// from/to pair; `to` defaults to `from`. Absent `from` gives nullopt.
  static std::optional<Period> period_params(const httplib::Request& req) {
    auto from = param(req, "from");
    auto to = param(req, "to");
    if (!from && !to) return std::nullopt;
    if (!from) throw RequestError("'to' given without 'from'");
    Period p{date_param("from", *from), date_param("to", to.value_or(*from))};
    if (!p.valid()) throw RequestError("'from' is after 'to'");
    return p;
  }

  nlohmann::json preview_json(const ContentCluster& c) const {
    if (c.representative_text) return {{"text", *c.representative_text}};
    if (c.representative_blob) {
      std::string hex = c.representative_blob->checksum.hex();
      return {{"media_url", "/api/media/" + hex},
              {"checksum", hex},
              {"size_bytes", c.representative_blob->size_bytes}};
    }
    return nlohmann::json::object();
  }

  void login(const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("username") ||
        !body.contains("password") || !body["username"].is_string() ||
        !body["password"].is_string()) {
      error(res, 400, "bad_request", "expected {\"username\": ..., \"password\": ...}");
      return;
    }
    auto session =
        sessions_->login(body["username"].get<std::string>(), body["password"].get<std::string>());
    if (!session) {
      error(res, 401, "invalid_credentials", "wrong username or password");
      return;
    }
    send(res, {{"token", session->token}, {"expires_at", format_timestamp(session->expires_at)}});
  }

  void top(const httplib::Request& req, httplib::Response& res) const {
    auto period = period_params(req);
    if (!period) throw RequestError("'from' is required");
    auto kind_name = param(req, "kind").value_or("image");
    auto kind = parse_media_kind(kind_name);
    if (!kind) throw RequestError("unknown kind '" + kind_name + "'");
    std::size_t limit = 10;
    if (auto l = param(req, "limit")) {
      auto [ptr, ec] = std::from_chars(l->data(), l->data() + l->size(), limit);
      if (ec != std::errc{} || ptr != l->data() + l->size() || limit < 1 || limit > 200) {
        throw RequestError("limit must be an integer within 1..200");
      }
    }
    send(res, top_json(*period, *kind, limit));
  }

  void content(const httplib::Request& req, httplib::Response& res) const {
    send(res, content_json(req.matches[1].str(), period_params(req)));
  }

  void media(const httplib::Request& req, httplib::Response& res) const {
    auto sum = Checksum128::from_hex(req.matches[1].str());
    if (!sum) throw RequestError("bad checksum");
    auto snap = snapshot();
    auto bytes = snap->blobs.get(*sum);
    std::string type = media_content_type(bytes);
    res.status = 200;
    res.set_header("Cache-Control", "private, max-age=31536000, immutable");
    res.set_header("ETag", "\"" + sum->hex() + "\"");
    res.set_content(std::string(bytes.begin(), bytes.end()), type);
  }

  void members(const httplib::Request& req, httplib::Response& res) const {
    std::optional<ChatKind> kind;
    if (auto k = param(req, "kind")) {
      kind = parse_chat_kind(*k);
      if (!kind) throw RequestError("kind must be group or channel");
    }
    send(res, members_cdf_json(kind));
  }

  void weekly(const httplib::Request&, httplib::Response& res) const { send(res, weekly_volume_json()); }

  std::shared_ptr<const LoadedSnapshot> snapshot_;
  std::shared_ptr<SessionManager> sessions_;
  ApiSettings settings_;
};

}  // namespace tgmon
