// Operator entry points: ingest, process, scan-links, serve, gen-fixture,
// add-account.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error.

#include <csignal>
#include <fstream>
#include <iostream>
#include <iterator>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "httplib.h"

#include "tgmon/api.hpp"
#include "tgmon/auth.hpp"
#include "tgmon/config.hpp"
#include "tgmon/fixture.hpp"
#include "tgmon/pipeline.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

int run_ingest(const std::string& input, const std::string& dataset, const std::string& config_path) {
  auto config = tgmon::load_config(config_path);
  auto result = tgmon::ingest_directory(input, dataset, config.pseudonymizer());
  for (const auto& w : result.warnings) {
    std::cerr << "warning: " << w.file.string();
    if (w.warning.line) std::cerr << ":" << w.warning.line;
    std::cerr << ": " << w.warning.message << "\n";
  }
  const auto& s = result.stats;
  std::cout << "files " << s.files << "\n"
            << "lines " << s.lines << "\n"
            << "parsed " << s.parsed << "\n"
            << "skipped " << s.invalid + s.duplicates << " (invalid " << s.invalid << ", duplicates "
            << s.duplicates << ")\n"
            << "blobs stored " << s.blobs << "\n";
  return 0;
}

int run_process(const std::string& dataset, const std::string& config_path) {
  auto config = tgmon::load_config(config_path);
  auto result = tgmon::process_dataset(dataset, config.thresholds);
  for (const auto& f : result.failures) {
    std::cerr << "warning: (" << f.key.chat_id << ", " << f.key.msg_id << "): " << f.reason << "\n";
  }
  std::cout << "fingerprinted " << result.stats.fingerprinted << "\n"
            << "failures " << result.stats.failures << "\n";
  for (tgmon::MediaKind k : tgmon::kAllMediaKinds) {
    std::string kind(tgmon::to_string(k));
    std::cout << kind << " clusters " << result.stats.clusters_per_kind.at(kind) << "\n";
  }
  return 0;
}

int run_scan_links(const std::vector<std::string>& files) {
  std::set<std::string> printed;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw tgmon::DataError("cannot read " + file);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    for (const auto& link : tgmon::extract_invite_links(text)) {
      if (printed.insert(link.url).second) std::cout << link.url << "\n";
    }
  }
  return 0;
}

int run_serve(const std::string& dataset, std::string bind, const std::string& config_path) {
  auto config = tgmon::load_config(config_path);
  if (bind.empty()) bind = config.bind;
  auto [host, port] = tgmon::split_bind_address(bind);
  if (config.accounts_file.empty()) throw tgmon::ConfigError("accounts_file is not configured");

  auto sessions = std::make_shared<tgmon::SessionManager>(
      tgmon::AccountStore::load(config.accounts_file), std::chrono::seconds(config.token_ttl_seconds));
  tgmon::ApiService api(tgmon::LoadedSnapshot::load(dataset), sessions,
                        tgmon::ApiSettings{config.cors_origin, config.public_media_base_url});
  httplib::Server server;
  api.mount(server);

  // SIGINT/SIGTERM stop the server; SIGHUP reloads the dataset.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGHUP);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  std::thread watcher([&] {
    for (;;) {
      int sig = 0;
      sigwait(&signals, &sig);
      if (sig == SIGHUP) {
        try {
          api.reload(tgmon::LoadedSnapshot::load(dataset));
          std::cerr << "reloaded " << dataset << "\n";
        } catch (const std::exception& e) {
          std::cerr << "reload failed, keeping previous snapshot: " << e.what() << "\n";
        }
        continue;
      }
      server.stop();
      return;
    }
  });

  if (!server.bind_to_port(host, port)) {
    pthread_kill(watcher.native_handle(), SIGTERM);
    watcher.join();
    throw tgmon::ConfigError("cannot bind " + bind);
  }
  std::cerr << "serving " << dataset << " on " << host << ":" << port << "\n";
  server.listen_after_bind();
  watcher.join();
  return 0;
}

int run_gen_fixture(const std::string& out, std::uint64_t seed, std::size_t messages) {
  auto manifest = tgmon::generate_fixture({out, seed, messages});
  std::cout << "messages " << manifest.messages << "\n"
            << "invalid lines " << manifest.invalid_lines << "\n"
            << "duplicate lines " << manifest.duplicate_lines << "\n";
  for (const auto& [kind, n] : manifest.expected_clusters) {
    std::cout << kind << " clusters " << n << "\n";
  }
  return 0;
}

int run_add_account(const std::string& accounts_path, const std::string& username) {
  std::string password;
  std::getline(std::cin, password);
  if (password.empty()) throw tgmon::ConfigError("empty password on stdin");
  tgmon::AccountStore store;
  if (std::filesystem::exists(accounts_path)) store = tgmon::AccountStore::load(accounts_path);
  store.add({username, tgmon::make_password_digest(password), tgmon::system_now()});
  tgmon::detail::write_file_atomic(accounts_path, store.to_json().dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chat-export monitor: ingest, cluster, rank and serve shared content"};
  app.require_subcommand(1);

  std::string input, dataset, config, bind, out, accounts, username;
  std::vector<std::string> files;
  std::uint64_t seed = 7;
  std::size_t messages = 1000;

  auto* ingest = app.add_subcommand("ingest", "Parse exports into a dataset");
  ingest->add_option("--input", input, "Directory of *.jsonl exports")->required();
  ingest->add_option("--dataset", dataset, "Dataset directory")->required();
  ingest->add_option("--config", config, "Configuration file")->required();

  auto* process = app.add_subcommand("process", "Fingerprint and cluster a dataset");
  process->add_option("--dataset", dataset, "Dataset directory")->required();
  process->add_option("--config", config, "Configuration file")->required();

  auto* scan = app.add_subcommand("scan-links", "Print invite links found in files");
  scan->add_option("--input", files, "Files to scan")->required();

  auto* serve = app.add_subcommand("serve", "Serve the query API");
  serve->add_option("--dataset", dataset, "Dataset directory")->required();
  serve->add_option("--bind", bind, "host:port (defaults to the config value)");
  serve->add_option("--config", config, "Configuration file")->required();

  auto* gen = app.add_subcommand("gen-fixture", "Write a synthetic corpus with ground truth");
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--seed", seed, "Random seed");
  gen->add_option("--messages", messages, "Number of valid messages")->check(CLI::Range(100, 10000000));

  auto* add = app.add_subcommand("add-account", "Add an analyst account (password read from stdin)");
  add->add_option("--accounts", accounts, "Accounts file")->required();
  add->add_option("--username", username, "Account name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*ingest) return run_ingest(input, dataset, config);
    if (*process) return run_process(dataset, config);
    if (*scan) return run_scan_links(files);
    if (*serve) return run_serve(dataset, bind, config);
    if (*gen) return run_gen_fixture(out, seed, messages);
    if (*add) return run_add_account(accounts, username);
  } catch (const tgmon::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
