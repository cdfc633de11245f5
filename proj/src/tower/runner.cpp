#include "harbour/tower/runner.hpp"

#include <spdlog/spdlog.h>

namespace harbour::tower {

using nlohmann::json;

TowerRunner::TowerRunner(const scenario::Scenario& sc, TowerOptions options)
    : opt_(std::move(options)),
      gravity_(sc.environment.gravity),
      picture_(opt_.history, opt_.decimation),
      engine_(sc) {
  if (opt_.query) {
    query_ = std::make_unique<rti::LocalService>(
        *opt_.query, [this](const rti::FedMessage& m) { return handle_query(m); }, "tower-query");
  }
  if (!opt_.event_log.empty()) log_ = std::make_unique<EventLogWriter>(opt_.event_log);
  rti_ = rti::RtiClient::join(opt_.rti, opt_.federate_id);
  rti_->subscribe(rti::kShipStateClass);

  // Ships already on the federation arrive in the join snapshot.
  const auto now = Clock::now();
  for (const auto& obj : rti_->join_snapshot().value("objects", json::array())) {
    if (obj.value("class", "") != rti::kShipStateClass) continue;
    const std::string id = obj.value("instance", "");
    const std::string owner = obj.value("owner", "");
    picture_.ingest(id, owner, obj.value("time", 0.0), obj.value("attributes", json::object()), now);
    if (obj.value("stale", false)) picture_.set_offline(owner);
  }
  spdlog::info("tower: joined the federation at {}:{} as '{}' ({} ships known)", opt_.rti.host,
               opt_.rti.port, opt_.federate_id, picture_.records().size());
}

TowerRunner::~TowerRunner() { stop(); }

void TowerRunner::start() {
  if (thread_.joinable()) return;
  if (query_) query_->start();
  thread_ = std::thread([this] { run(); });
}

void TowerRunner::stop() {
  stopping_ = true;
  if (thread_.joinable()) thread_.join();
  if (query_) query_->stop();
  rti_->resign();
}

void TowerRunner::wait() {
  std::unique_lock lock(done_mutex_);
  done_cv_.wait(lock, [&] { return finished_; });
}

void TowerRunner::run() {
  const auto period = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(opt_.eval_period));
  auto next_eval = Clock::now() + period;
  while (!stopping_ && !rti_->lost()) {
    const auto now = Clock::now();
    if (now >= next_eval) {
      evaluate();
      next_eval += period;
      if (next_eval < now) next_eval = now + period;
      continue;
    }
    const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(next_eval - now) +
                      std::chrono::milliseconds(1);
    if (auto m = rti_->poll(wait)) handle(*m);
  }
  if (rti_->lost() && !stopping_) spdlog::error("tower: federation lost");
  {
    std::lock_guard lock(done_mutex_);
    finished_ = true;
  }
  done_cv_.notify_all();
}

void TowerRunner::handle(const rti::FedMessage& m) {
  switch (m.type) {
    case rti::MsgType::UPDATE: {
      std::lock_guard lock(mutex_);
      const auto r = picture_.ingest(m.payload.value("instance", ""), m.federate_id, m.sim_time,
                                     m.payload.value("attributes", json::object()), Clock::now());
      if (r == TrafficPicture::Ingest::created) {
        spdlog::info("tower: tracking '{}' from '{}'", m.payload.value("instance", ""), m.federate_id);
      } else if (r == TrafficPicture::Ingest::invalid) {
        spdlog::warn("tower: ignoring update without a ship state from '{}'", m.federate_id);
      }
      break;
    }
    case rti::MsgType::RESIGN: {
      const std::string who = m.payload.value("federate", "");
      spdlog::info("tower: '{}' resigned{}", who, m.payload.value("forced", false) ? " (forced)" : "");
      std::lock_guard lock(mutex_);
      picture_.set_offline(who);
      break;
    }
    case rti::MsgType::ERROR:
      spdlog::warn("tower: RTI error {}: {}", m.payload.value("code", "?"),
                   m.payload.value("message", ""));
      break;
    default:
      break;
  }
}

void TowerRunner::evaluate() {
  std::lock_guard lock(mutex_);
  const auto views = picture_.views();
  for (auto& e : engine_.evaluate(views)) {
    std::string ids;
    for (const auto& id : e.ids) ids += (ids.empty() ? "" : ", ") + id;
    spdlog::info("tower: {} at t={:.1f} s [{}]", port::to_string(e.kind), e.time, ids);
    if (log_) log_->append(e);
    events_.push_back(std::move(e));
  }
}

json TowerRunner::picture(bool with_tracks) const {
  std::lock_guard lock(mutex_);
  return picture_.to_json(Clock::now(), with_tracks);
}

std::vector<TowerEvent> TowerRunner::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

SessionMetrics TowerRunner::metrics() const {
  std::lock_guard lock(mutex_);
  return compute_metrics(events_);
}

TeleportView TowerRunner::teleport(const std::string& ship) const {
  std::lock_guard lock(mutex_);
  const TrafficRecord* r = picture_.find(ship);
  if (!r) throw ShipUnknown("no ship '" + ship + "' in the traffic picture");
  TeleportView v;
  v.ship = ship;
  v.sim_time = r->sim_time;
  v.conning = r->attributes;
  v.staleness = r->staleness(Clock::now());
  v.degraded = r->offline || v.staleness > opt_.degraded_after;
  return v;
}

bool TowerRunner::set_environment(const json& change) {
  scenario::parse_environment_change(change, gravity_);
  return rti_->interaction(rti::kEnvironmentClass, 0.0, change);
}

std::vector<rti::FedMessage> TowerRunner::handle_query(const rti::FedMessage& m) {
  auto reply = [&](rti::MsgType t, json payload, double time = 0.0) {
    return std::vector<rti::FedMessage>{
        rti::make_message(t, opt_.federate_id, time, 0, std::move(payload))};
  };
  auto error = [&](const std::string& code, const std::string& what) {
    return reply(rti::MsgType::ERROR, {{"code", code}, {"message", what}});
  };
  switch (m.type) {
    case rti::MsgType::PICTURE_REQUEST:
      return reply(rti::MsgType::PICTURE, picture(m.payload.value("tracks", false)));
    case rti::MsgType::EVENTS_REQUEST: {
      const auto all = events();
      const std::size_t since = std::min<std::size_t>(m.payload.value("since", 0), all.size());
      json list = json::array();
      for (std::size_t i = since; i < all.size(); ++i) list.push_back(to_json(all[i]));
      return reply(rti::MsgType::EVENTS, {{"events", list}, {"total", all.size()}});
    }
    case rti::MsgType::METRICS_REQUEST:
      return reply(rti::MsgType::METRICS, to_json(metrics()));
    case rti::MsgType::TELEPORT_REQUEST: {
      try {
        const auto v = teleport(m.payload.value("ship", ""));
        return reply(rti::MsgType::TELEPORT,
                     {{"ship", v.ship}, {"conning", v.conning}, {"staleness", v.staleness},
                      {"degraded", v.degraded}},
                     v.sim_time);
      } catch (const ShipUnknown& e) {
        return error("ship_unknown", e.what());
      }
    }
    case rti::MsgType::INSTRUCTOR_SET_ENVIRONMENT: {
      try {
        const bool sent = set_environment(m.payload.value("environment", json::object()));
        return reply(rti::MsgType::SESSION_ACK,
                     {{"action", "set_environment"}, {"ok", sent}, {"forwarded", sent}});
      } catch (const ConfigError& e) {
        return reply(rti::MsgType::SESSION_ACK,
                     {{"action", "set_environment"}, {"ok", false}, {"reason", e.what()}});
      }
    }
    default:
      return error("unexpected_type",
                   std::string(rti::to_string(m.type)) + " is not a tower request");
  }
}

}  // namespace harbour::tower
