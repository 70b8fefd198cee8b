#pragma once

// Analyst accounts (salted PBKDF2 digests) and bearer-token sessions.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "tgmon/crypto.hpp"
#include "tgmon/error.hpp"
#include "tgmon/hex.hpp"
#include "tgmon/time.hpp"

namespace tgmon {

inline constexpr int kDefaultPbkdf2Iterations = 60000;

/// `pbkdf2-sha256$<iterations>$<salt hex>$<digest hex>`.
inline std::string make_password_digest(std::string_view password,
                                        std::span<const std::uint8_t> salt,
                                        int iterations = kDefaultPbkdf2Iterations) {
  auto dk = crypto::pbkdf2_sha256(password, salt, iterations);
  return "pbkdf2-sha256$" + std::to_string(iterations) + "$" + to_hex(salt) + "$" + to_hex(dk);
}

inline std::string make_password_digest(std::string_view password) {
  auto salt = crypto::random_bytes(16);
  return make_password_digest(password, salt);
}

/// Constant-time with respect to the password bytes.
inline bool verify_password(std::string_view password, std::string_view digest) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    auto d = digest.find('$', pos);
    parts.push_back(digest.substr(pos, d == std::string_view::npos ? d : d - pos));
    if (d == std::string_view::npos) break;
    pos = d + 1;
  }
  if (parts.size() != 4 || parts[0] != "pbkdf2-sha256") return false;
  int iterations = 0;
  auto [p, ec] = std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), iterations);
  if (ec != std::errc{} || iterations <= 0) return false;
  auto salt = from_hex(parts[2]);
  auto expected = from_hex(parts[3]);
  if (!salt || !expected) return false;
  auto actual = crypto::pbkdf2_sha256(password, *salt, iterations);
  return crypto::constant_time_equal(actual, *expected);
}

struct Account {
  std::string username;
  std::string password_digest;
  Timestamp created_at{};
};

class AccountStore {
 public:
  void add(Account account) {
    if (account.username.empty()) throw ConfigError("account without username");
    if (!accounts_.emplace(account.username, account).second) {
      throw ConfigError("duplicate account '" + account.username + "'");
    }
  }

  const Account* find(std::string_view username) const {
    auto it = accounts_.find(std::string(username));
    return it == accounts_.end() ? nullptr : &it->second;
  }

  std::size_t size() const { return accounts_.size(); }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [_, a] : accounts_) {
      arr.push_back({{"username", a.username},
                     {"password_digest", a.password_digest},
                     {"created_at", format_timestamp(a.created_at)}});
    }
    return arr;
  }

  static AccountStore from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ConfigError("accounts file must hold a JSON array");
    AccountStore store;
    try {
      for (const auto& a : j) {
        auto created = parse_rfc3339_utc(a.at("created_at").get<std::string>());
        if (!created) throw ConfigError("account created_at is not a UTC timestamp");
        store.add(Account{a.at("username").get<std::string>(),
                          a.at("password_digest").get<std::string>(), *created});
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed accounts file: ") + e.what());
    }
    return store;
  }

  static AccountStore load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read accounts file " + path.string());
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("accounts file is not valid JSON");
    return from_json(j);
  }

 private:
  std::map<std::string, Account> accounts_;
};

enum class TokenStatus { ok, missing, invalid, expired };

struct Session {
  std::string token;
  std::string username;
  Timestamp expires_at{};
};

using Clock = std::function<Timestamp()>;

inline Timestamp system_now() {
  return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

/// Issues and checks opaque bearer tokens. Thread-safe.
class SessionManager {
 public:
  SessionManager(AccountStore accounts, std::chrono::seconds ttl, Clock clock = system_now)
      : accounts_(std::move(accounts)), ttl_(ttl), clock_(std::move(clock)) {}

  std::optional<Session> login(std::string_view username, std::string_view password) {
    const Account* account = accounts_.find(username);
    // Unknown users still pay for one digest evaluation.
    static const std::string kDummy = make_password_digest(
        "", std::vector<std::uint8_t>(16, 0), kDefaultPbkdf2Iterations);
    bool ok = verify_password(password, account ? account->password_digest : kDummy);
    if (!account || !ok) return std::nullopt;

    Session s{to_hex(crypto::random_bytes(32)), account->username, clock_() + ttl_};
    std::lock_guard lock(mutex_);
    sessions_[s.token] = s;
    return s;
  }

  TokenStatus check(std::string_view token) {
    if (token.empty()) return TokenStatus::missing;
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(std::string(token));
    if (it == sessions_.end()) return TokenStatus::invalid;
    if (clock_() >= it->second.expires_at) return TokenStatus::expired;
    return TokenStatus::ok;
  }

  void revoke(std::string_view token) {
    std::lock_guard lock(mutex_);
    sessions_.erase(std::string(token));
  }

 private:
  AccountStore accounts_;
  std::chrono::seconds ttl_;
  Clock clock_;
  std::mutex mutex_;
  std::map<std::string, Session> sessions_;
};

}  // namespace tgmon
