#include "harbour/bridge/runner.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>

namespace harbour::bridge {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

BridgeRunner::BridgeRunner(const scenario::Scenario& sc, BridgeOptions options)
    : gravity_(sc.environment.gravity), opt_(std::move(options)), session_(sc, opt_.ship_id, opt_.dt) {
  if (opt_.federate_id.empty()) opt_.federate_id = "bridge-" + opt_.ship_id;
  if (!(opt_.publish_rate > 0.0)) throw ConfigError("publish rate must be positive");
  if (opt_.time_scale < 0.0) throw ConfigError("time scale must be >= 0");
  publish_every_ = std::max<std::uint64_t>(1, std::llround(1.0 / (opt_.publish_rate * opt_.dt)));
  status_.paused = opt_.start_paused;
  snapshot_ = std::make_shared<const ConningSnapshot>(session_.snapshot());

  if (opt_.control) {
    control_ = std::make_unique<rti::LocalService>(
        *opt_.control, [this](const rti::FedMessage& m) { return handle_control(m); },
        "bridge-control");
  }
  if (opt_.rti) {
    try {
      rti_ = rti::RtiClient::join(*opt_.rti, opt_.federate_id);
      rti_->publish(kShipStateClass, opt_.ship_id, ship_state_attributes());
      rti_->subscribe(kEnvironmentClass);
      status_.federated = true;
      spdlog::info("bridge: joined the federation at {}:{} as '{}'", opt_.rti->host,
                   opt_.rti->port, opt_.federate_id);
    } catch (const net::NetError& e) {
      spdlog::warn("bridge: no federation at {}:{} ({}); running standalone", opt_.rti->host,
                   opt_.rti->port, e.what());
    }
  }
  if (!opt_.order_log.empty()) {
    log_ = std::make_unique<OrderLogWriter>(opt_.order_log, make_header(sc, session_));
  }
  if (!opt_.trajectory.empty()) {
    traj_file_ = std::make_unique<std::ofstream>(opt_.trajectory, std::ios::trunc);
    if (!*traj_file_) throw IoError("cannot write trajectory '" + opt_.trajectory + "'");
    traj_ = std::make_unique<TrajectoryWriter>(*traj_file_, opt_.trajectory_stride);
  }
}

BridgeRunner::~BridgeRunner() { stop(); }

void BridgeRunner::start() {
  if (thread_.joinable()) return;
  {
    std::lock_guard lock(snap_mutex_);
    status_.running = true;
  }
  if (control_) control_->start();
  thread_ = std::thread([this] { run(); });
}

void BridgeRunner::stop() {
  if (thread_.joinable()) {
    auto cmd = std::make_unique<Command>();
    cmd->kind = Command::stop;
    {
      std::lock_guard lock(cmd_mutex_);
      if (accepting_) commands_.push_back(std::move(cmd));
    }
    cmd_cv_.notify_all();
    thread_.join();
  }
  if (control_) control_->stop();
  if (rti_) rti_->resign();
}

void BridgeRunner::wait() {
  std::unique_lock lock(done_mutex_);
  done_cv_.wait(lock, [&] { return finished_; });
}

OrderResult BridgeRunner::post(std::unique_ptr<Command> cmd) {
  auto fut = cmd->done.get_future();
  {
    std::lock_guard lock(cmd_mutex_);
    if (!accepting_) return {false, snapshot()->step, "session has ended"};
    commands_.push_back(std::move(cmd));
  }
  cmd_cv_.notify_all();
  return fut.get();
}

OrderResult BridgeRunner::submit(const scenario::HelmOrder& order) {
  auto cmd = std::make_unique<Command>();
  cmd->kind = Command::helm;
  cmd->order = order;
  return post(std::move(cmd));
}

OrderResult BridgeRunner::submit_environment(const json& change) {
  scenario::parse_environment_change(change, gravity_);
  auto cmd = std::make_unique<Command>();
  cmd->kind = Command::env;
  cmd->environment = change;
  return post(std::move(cmd));
}

void BridgeRunner::pause(bool paused) {
  auto cmd = std::make_unique<Command>();
  cmd->kind = paused ? Command::pause : Command::resume;
  post(std::move(cmd));
}

std::shared_ptr<const ConningSnapshot> BridgeRunner::snapshot() const {
  std::lock_guard lock(snap_mutex_);
  return snapshot_;
}

BridgeStatus BridgeRunner::status() const {
  std::lock_guard lock(snap_mutex_);
  return status_;
}

bool BridgeRunner::drain(bool& stop_requested) {
  std::deque<std::unique_ptr<Command>> batch;
  {
    std::lock_guard lock(cmd_mutex_);
    batch.swap(commands_);
  }
  const bool any = !batch.empty();
  for (auto& cmd : batch) {
    OrderResult res{true, session_.steps(), ""};
    try {
      switch (cmd->kind) {
        case Command::helm:
          session_.apply(cmd->order);
          if (log_) log_->order(session_.steps(), cmd->order);
          break;
        case Command::env:
          session_.set_environment(
              scenario::parse_environment_change(cmd->environment, gravity_));
          if (log_) log_->environment(session_.steps(), cmd->environment);
          break;
        case Command::pause:
        case Command::resume: {
          std::lock_guard lock(snap_mutex_);
          status_.paused = cmd->kind == Command::pause;
          break;
        }
        case Command::stop:
          stop_requested = true;
          break;
      }
    } catch (const Error& e) {
      res = {false, session_.steps(), e.what()};
    }
    cmd->done.set_value(res);
  }
  return any;
}

void BridgeRunner::apply_script() {
  const auto& steps = session_.ship().script.steps;
  // A script time maps to the first step boundary at or after it.
  const double now = session_.sim_time() + 1e-9;
  while (script_next_ < steps.size() && steps[script_next_].time <= now) {
    const auto& s = steps[script_next_++];
    try {
      session_.apply(s.order);
      if (log_) log_->order(session_.steps(), s.order);
    } catch (const OrderRejected& e) {
      spdlog::warn("bridge: script order at t={} rejected: {}", s.time, e.what());
    }
  }
}

void BridgeRunner::publish() {
  if (!rti_ || rti_->lost()) return;
  const auto snap = snapshot();
  if (rti_->update(opt_.ship_id, snap->sim_time, to_json(*snap))) {
    std::lock_guard lock(snap_mutex_);
    ++status_.publishes;
  }
}

void BridgeRunner::poll_federation() {
  if (!rti_) return;
  while (auto m = rti_->poll(std::chrono::milliseconds(0))) {
    if (m->type == rti::MsgType::INTERACTION && m->payload.value("class", "") == kEnvironmentClass) {
      const json change = m->payload.value("parameters", json::object());
      try {
        session_.set_environment(
            scenario::parse_environment_change(change, gravity_));
        if (log_) log_->environment(session_.steps(), change);
        spdlog::info("bridge: environment changed by '{}'", m->federate_id);
      } catch (const Error& e) {
        spdlog::warn("bridge: ignoring environment change from '{}': {}", m->federate_id, e.what());
      }
    } else if (m->type == rti::MsgType::ERROR) {
      spdlog::warn("bridge: RTI error {}: {}", m->payload.value("code", "?"),
                   m->payload.value("message", ""));
    }
  }
  if (rti_->lost()) {
    std::lock_guard lock(snap_mutex_);
    if (status_.federated) {
      status_.federated = false;
      status_.federation_lost = true;
      spdlog::warn("bridge: federation lost{}; continuing standalone",
                   rti_->forced_out() ? " (resigned by the RTI)" : "");
    }
  }
}

void BridgeRunner::run() {
  auto base_wall = Clock::now();
  std::uint64_t base_step = session_.steps();
  int behind = 0;
  bool was_paused = false;

  if (traj_) traj_->row(session_);
  publish();

  for (;;) {
    bool stop_requested = false;
    drain(stop_requested);
    if (stop_requested) break;
    poll_federation();

    if (status().paused) {
      std::unique_lock lock(cmd_mutex_);
      cmd_cv_.wait_for(lock, std::chrono::milliseconds(20), [&] { return !commands_.empty(); });
      was_paused = true;
      continue;
    }
    if (was_paused) {
      was_paused = false;
      base_wall = Clock::now();
      base_step = session_.steps();
      behind = 0;
    }

    apply_script();
    session_.step();
    if (traj_) traj_->row(session_);
    {
      auto snap = std::make_shared<const ConningSnapshot>(session_.snapshot());
      std::lock_guard lock(snap_mutex_);
      snapshot_ = std::move(snap);
    }
    if (session_.steps() % publish_every_ == 0) publish();
    if (opt_.duration && session_.sim_time() >= *opt_.duration - 1e-9) break;

    if (opt_.time_scale > 0.0) {
      const auto target =
          base_wall + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(
                          static_cast<double>(session_.steps() - base_step) * opt_.dt /
                          opt_.time_scale));
      if (Clock::now() < target) {
        behind = 0;
        std::this_thread::sleep_until(target);
      } else if (++behind > opt_.max_catchup) {
        const double debt = std::chrono::duration<double>(Clock::now() - target).count();
        spdlog::warn("bridge: {:.3f} s behind real time after {} catch-up steps; dropping the debt",
                     debt, opt_.max_catchup);
        base_wall = Clock::now();
        base_step = session_.steps();
        behind = 0;
        std::lock_guard lock(snap_mutex_);
        ++status_.debt_drops;
      }
    }
  }
  finish();
}

void BridgeRunner::finish() {
  {
    std::lock_guard lock(cmd_mutex_);
    accepting_ = false;
  }
  bool ignored = false;
  drain(ignored);
  if (log_) log_->finish(session_.steps());
  if (traj_file_) traj_file_->flush();
  if (rti_) rti_->resign();
  {
    std::lock_guard lock(snap_mutex_);
    status_.running = false;
  }
  {
    std::lock_guard lock(done_mutex_);
    finished_ = true;
  }
  done_cv_.notify_all();
}

std::vector<rti::FedMessage> BridgeRunner::handle_control(const rti::FedMessage& m) {
  const auto snap = snapshot();
  auto reply = [&](rti::MsgType t, json payload) {
    return std::vector<rti::FedMessage>{
        rti::make_message(t, opt_.federate_id, snap->sim_time, 0, std::move(payload))};
  };
  switch (m.type) {
    case rti::MsgType::HELM_ORDER: {
      scenario::HelmOrder order;
      try {
        order = scenario::parse_order(m.payload);
      } catch (const ConfigError& e) {
        return reply(rti::MsgType::ORDER_ACK, {{"accepted", false}, {"reason", e.what()}});
      }
      const OrderResult r = submit(order);
      json p{{"accepted", r.accepted}, {"step", r.step}, {"order", scenario::order_json(order)}};
      if (!r.accepted) p["reason"] = r.reason;
      return reply(rti::MsgType::ORDER_ACK, std::move(p));
    }
    case rti::MsgType::SNAPSHOT_REQUEST: {
      const BridgeStatus st = status();
      return reply(rti::MsgType::SNAPSHOT,
                   {{"ship", opt_.ship_id},
                    {"conning", to_json(*snap)},
                    {"status", {{"running", st.running}, {"paused", st.paused},
                                {"federated", st.federated},
                                {"federation_lost", st.federation_lost}}}});
    }
    case rti::MsgType::SESSION_CONTROL: {
      const std::string action = m.payload.value("action", "");
      OrderResult r{true, snap->step, ""};
      if (action == "pause" || action == "resume") {
        pause(action == "pause");
      } else if (action == "stop") {
        auto cmd = std::make_unique<Command>();
        cmd->kind = Command::stop;
        r = post(std::move(cmd));
      } else if (action == "set_environment") {
        try {
          r = submit_environment(m.payload.value("environment", json::object()));
        } catch (const ConfigError& e) {
          r = {false, snap->step, e.what()};
        }
      } else {
        r = {false, snap->step, "unknown action '" + action + "'"};
      }
      json p{{"action", action}, {"ok", r.accepted}, {"step", r.step},
             {"paused", status().paused}};
      if (!r.accepted) p["reason"] = r.reason;
      return reply(rti::MsgType::SESSION_ACK, std::move(p));
    }
    default:
      return reply(rti::MsgType::ERROR,
                   {{"code", "unexpected_type"},
                    {"message", std::string(rti::to_string(m.type)) + " is not a bridge request"}});
  }
}

}  // namespace harbour::bridge
