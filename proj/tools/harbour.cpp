// harbour: trials, federation processes, replay and local-protocol clients.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "cli_common.hpp"
#include "harbour/bridge/order_log.hpp"
#include "harbour/rti/client.hpp"
#include "harbour/rti/service.hpp"
#include "harbour/trials/trials.hpp"

namespace harbour::cli {

std::atomic<bool> g_interrupted{false};

namespace {
extern "C" void on_signal(int) { g_interrupted = true; }
}  // namespace

void install_signal_handlers() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
}

std::string data_dir() {
  if (const char* d = std::getenv("HARBOUR_DATA"); d && *d) return d;
  return HARBOUR_DATA_DIR;
}

std::string resolve_ship(const std::string& name) {
  namespace fs = std::filesystem;
  if (fs::exists(name)) return name;
  const std::string file = fs::path(name).has_extension() ? name : name + ".cfg";
  for (const fs::path& dir : {fs::path("ships"), fs::path(data_dir()) / "ships"}) {
    if (fs::exists(dir / file)) return (dir / file).string();
  }
  throw ConfigError("unknown ship '" + name + "' (not a file, not in ./ships or " + data_dir() +
                    "/ships)");
}

net::Endpoint endpoint_or(const std::string& text, const net::Endpoint& fallback) {
  return text.empty() ? fallback : net::parse_endpoint(text, fallback);
}

rti::FedMessage request(const net::Endpoint& ep, rti::MsgType type, nlohmann::json payload) {
  rti::LocalClient c(ep);
  return c.request(type, payload.is_null() ? nlohmann::json::object() : std::move(payload));
}

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace harbour::cli

int main(int argc, char** argv) {
  using namespace harbour;
  using namespace harbour::cli;

  spdlog::set_default_logger(spdlog::stderr_color_mt("harbour"));
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");

  CLI::App app{"Cooperative harbour navigation simulator"};
  app.require_subcommand(1);
  std::string level = "info";
  app.add_option("--log-level", level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
  app.parse_complete_callback([&] { spdlog::set_level(spdlog::level::from_str(level)); });

  int code = kOk;
  add_trial_commands(app, code);
  add_federation_commands(app, code);
  add_client_commands(app, code);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int r = app.exit(e);
    return r == 0 ? kOk : kConfig;
  } catch (const rti::JoinRejected& e) {
    spdlog::error("{}", e.what());
    return e.code() == "duplicate_id" ? kDuplicateId : kFailure;
  } catch (const net::BindError& e) {
    spdlog::error("{}", e.what());
    return kBind;
  } catch (const net::NetError& e) {
    spdlog::error("{}", e.what());
    return kUnreachable;
  } catch (const trials::TrialFailure& e) {
    spdlog::error("trial failed: {}", e.what());
    return kTrial;
  } catch (const bridge::ReplayMismatch& e) {
    spdlog::error("replay mismatch: {}", e.what());
    return kTrial;
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
  return code;
}
