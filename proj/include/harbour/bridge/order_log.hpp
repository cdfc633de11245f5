#pragma once

// Order log of a bridge session and its replay. One JSON object per line:
//
//   {"dt":0.05,"harbour_order_log":1,"initial":{...},"scenario":"...","ship":"k1","config_hash":"..."}
//   {"order":{"rudder_rad":-0.349...},"step":200}
//   {"environment":{"wind_speed_ms":12},"step":850}
//   {"end_step":6000}
//
// An entry at step k takes effect before the integration of step k + 1, as
// it did live. Replaying the entries through a fresh ShipSession therefore
// reproduces the session bit for bit.

#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "harbour/bridge/session.hpp"

namespace harbour::bridge {

/// The log does not belong to the scenario it is replayed against.
class ReplayMismatch : public Error {
 public:
  using Error::Error;
};

struct LogHeader {
  std::string scenario;
  std::string ship;
  double dt = kDefaultDt;
  std::string config_hash;  // FNV-1a of the ship config file
  nlohmann::json initial;   // initial state and shaft rate
};

struct LogEntry {
  std::uint64_t step = 0;
  std::optional<scenario::HelmOrder> order;
  std::optional<nlohmann::json> environment;  // as given; parsed again on replay
};

struct OrderLog {
  LogHeader header;
  std::vector<LogEntry> entries;
  std::optional<std::uint64_t> end_step;
  /// Lines after the last complete entry were unreadable or the end marker
  /// is missing.
  bool truncated = false;
};

LogHeader make_header(const scenario::Scenario& sc, const ShipSession& session);

/// Appends and flushes line by line so that a killed session leaves a
/// replayable prefix.
class OrderLogWriter {
 public:
  /// Throws IoError.
  OrderLogWriter(const std::string& path, const LogHeader& header);
  void order(std::uint64_t step, const scenario::HelmOrder& order);
  void environment(std::uint64_t step, const nlohmann::json& change);
  void finish(std::uint64_t end_step);

 private:
  void line(const nlohmann::json& j);
  std::ofstream out_;
  std::string path_;
};

/// Throws IoError, or ParseError for a bad header or a bad line followed by
/// further content.
OrderLog read_order_log(const std::string& path);
OrderLog parse_order_log(std::istream& in, const std::string& source);

/// Trajectory CSV: a version comment, a header row, then one row per
/// recorded step with 17 significant digits so equal text means equal bits.
class TrajectoryWriter {
 public:
  TrajectoryWriter(std::ostream& out, int stride = 1);
  void row(const ShipSession& s);

 private:
  std::ostream& out_;
  int stride_;
};

struct ReplayResult {
  std::uint64_t steps = 0;
  bool truncated = false;
};

/// Throws ReplayMismatch when ship, config hash, time step or initial
/// state differ from the scenario, or when a logged order is rejected.
ReplayResult replay(const OrderLog& log, const scenario::Scenario& sc, std::ostream& csv,
                    int stride = 1);

}  // namespace harbour::bridge
