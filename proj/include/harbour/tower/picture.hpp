#pragma once

// AIS-like traffic picture built from ShipState updates.

#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace harbour::tower {

using Clock = std::chrono::steady_clock;

struct TrackPoint {
  double t = 0.0, x = 0.0, y = 0.0;
};

/// What the rule engine needs of one ship.
struct ShipView {
  std::string id;
  double time = 0.0;
  double x = 0.0, y = 0.0, psi = 0.0;
  double sog = 0.0;
  double length = 0.0, beam = 0.0, draft = 0.0;
};

struct TrafficRecord {
  std::string id;
  std::string owner;  // publishing federate
  double sim_time = 0.0;
  nlohmann::json attributes;  // last published ShipState, verbatim
  ShipView view;
  double cog = 0.0;
  std::deque<TrackPoint> track;  // time ordered, decimated
  Clock::time_point received;
  /// The owner resigned or was dropped; the record keeps its last values.
  bool offline = false;

  double staleness(Clock::time_point now) const {
    return std::max(0.0, std::chrono::duration<double>(now - received).count());
  }
};

class TrafficPicture {
 public:
  enum class Ingest { created, updated, older_ignored, invalid };

  /// Track keeps at most `history` points spaced at least `decimation`
  /// seconds of simulated time apart.
  explicit TrafficPicture(std::size_t history = 600, double decimation = 1.0);

  /// Upserts a record. Updates older than the record's sim_time are
  /// ignored (latest sim_time wins); partial updates merge into the last
  /// attribute set.
  Ingest ingest(const std::string& instance, const std::string& owner, double sim_time,
                const nlohmann::json& attributes, Clock::time_point now);
  /// Marks every record published by `owner`.
  void set_offline(const std::string& owner);

  const std::map<std::string, TrafficRecord>& records() const { return records_; }
  const TrafficRecord* find(const std::string& id) const;
  /// Online ships only, sorted by id.
  std::vector<ShipView> views() const;
  nlohmann::json to_json(Clock::time_point now, bool with_tracks) const;

 private:
  std::size_t history_;
  double decimation_;
  std::map<std::string, TrafficRecord> records_;
};

}  // namespace harbour::tower
