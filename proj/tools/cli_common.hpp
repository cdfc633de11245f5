#pragma once

#include <atomic>
#include <string>

#include "CLI11.hpp"
#include "harbour/net/socket.hpp"
#include "harbour/rti/protocol.hpp"
#include "json.hpp"

namespace harbour::cli {

// Stable process exit codes (docs/cli.md).
enum Exit : int {
  kOk = 0,
  kFailure = 1,      // I/O and other runtime errors
  kConfig = 2,       // bad arguments, config, scenario or log syntax
  kTrial = 3,        // trial failure, replay mismatch
  kBind = 4,         // a listening port is taken
  kDuplicateId = 5,  // the RTI refused the federate id
  kUnreachable = 6,  // a queried federate is not running
};

/// Set by SIGINT/SIGTERM.
extern std::atomic<bool> g_interrupted;
void install_signal_handlers();
/// Sleeps in short slices until interrupted or `done()` holds.
template <class F>
void wait_until(F done);

/// "kriso", "kriso.cfg" or a path; names resolve under <data>/ships.
std::string resolve_ship(const std::string& name);
/// Data directory: HARBOUR_DATA, else the source tree the binary was built from.
std::string data_dir();

net::Endpoint endpoint_or(const std::string& text, const net::Endpoint& fallback);

/// Sends one request to a local service and returns the reply. Throws
/// net::NetError.
rti::FedMessage request(const net::Endpoint& ep, rti::MsgType type, nlohmann::json payload = {});

void print_json(const nlohmann::json& j);

void add_trial_commands(CLI::App& app, int& exit_code);
void add_federation_commands(CLI::App& app, int& exit_code);
void add_client_commands(CLI::App& app, int& exit_code);

}  // namespace harbour::cli

#include <chrono>
#include <thread>

template <class F>
void harbour::cli::wait_until(F done) {
  while (!g_interrupted && !done()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
}
