#include "harbour/rti/client.hpp"

#include <cstdlib>

namespace harbour::rti {

using nlohmann::json;

net::Endpoint default_endpoint() {
  const net::Endpoint fallback{"127.0.0.1", kDefaultPort};
  const char* env = std::getenv(kEndpointEnv);
  return env && *env ? net::parse_endpoint(env, fallback) : fallback;
}

std::unique_ptr<RtiClient> RtiClient::join(const net::Endpoint& ep, const std::string& federate_id,
                                           std::chrono::milliseconds timeout) {
  std::unique_ptr<RtiClient> c(new RtiClient());
  c->id_ = federate_id;
  c->socket_ = net::Socket::connect(ep, timeout);
  c->reader_ = std::thread([p = c.get()] { p->read_loop(); });
  c->send(MsgType::JOIN, 0.0, {{"protocol", kProtocolVersion}});
  const FedMessage reply = c->await_join_reply(timeout);
  c->snapshot_ = reply.payload;
  c->heartbeat_interval_ = reply.payload.value("heartbeat_interval", 1.0);
  c->heart_ = std::thread([p = c.get()] { p->heartbeat_loop(); });
  return c;
}

FedMessage RtiClient::await_join_reply(std::chrono::milliseconds timeout) {
  std::unique_lock lock(inbox_mutex_);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    for (auto it = inbox_.begin(); it != inbox_.end(); ++it) {
      if (it->type == MsgType::JOIN_ACK || it->type == MsgType::ERROR) {
        FedMessage m = std::move(*it);
        inbox_.erase(it);
        if (m.type == MsgType::ERROR) {
          const std::string code = m.payload.value("code", "error");
          throw JoinRejected(code, "join as '" + id_ + "' rejected: " +
                                       m.payload.value("message", code));
        }
        forced_out_ = false;
        lost_ = false;
        return m;
      }
    }
    if (lost_ && !forced_out_) throw net::NetError("connection closed while joining");
    if (inbox_cv_.wait_until(lock, deadline) == std::cv_status::timeout) {
      throw net::NetError("no JOIN_ACK within the timeout");
    }
  }
}

RtiClient::~RtiClient() {
  resign();
  closing_ = true;
  hb_cv_.notify_all();
  socket_.shutdown();
  if (reader_.joinable()) reader_.join();
  if (heart_.joinable()) heart_.join();
}

bool RtiClient::send(MsgType type, double sim_time, json payload) {
  if (lost_ && type != MsgType::JOIN) return false;
  std::lock_guard lock(send_mutex_);
  try {
    socket_.write_all(encode(make_message(type, id_, sim_time, ++seq_, std::move(payload))));
    return true;
  } catch (const net::NetError&) {
    lost_ = true;
    return false;
  }
}

bool RtiClient::publish(const std::string& cls, const std::string& instance,
                        const std::vector<std::string>& attributes) {
  return send(MsgType::PUBLISH, 0.0, {{"class", cls}, {"instance", instance}, {"attributes", attributes}});
}

bool RtiClient::subscribe(const std::string& cls) {
  return send(MsgType::SUBSCRIBE, 0.0, {{"class", cls}});
}

bool RtiClient::update(const std::string& instance, double sim_time, const json& attributes) {
  return send(MsgType::UPDATE, sim_time, {{"instance", instance}, {"attributes", attributes}});
}

bool RtiClient::interaction(const std::string& cls, double sim_time, const json& parameters,
                            const std::optional<std::vector<std::string>>& to) {
  json p{{"class", cls}, {"parameters", parameters}};
  if (to) p["to"] = *to;
  return send(MsgType::INTERACTION, sim_time, std::move(p));
}

std::optional<FedMessage> RtiClient::poll(std::chrono::milliseconds timeout) {
  std::unique_lock lock(inbox_mutex_);
  if (!inbox_cv_.wait_for(lock, timeout, [&] { return !inbox_.empty(); })) return std::nullopt;
  FedMessage m = std::move(inbox_.front());
  inbox_.pop_front();
  return m;
}

void RtiClient::resign() {
  if (closing_.exchange(true)) return;
  if (!lost_) send(MsgType::RESIGN, 0.0, json::object());
  hb_cv_.notify_all();
}

void RtiClient::rejoin(std::chrono::milliseconds timeout) {
  {
    std::lock_guard lock(send_mutex_);
    seq_ = 0;
  }
  send(MsgType::JOIN, 0.0, {{"protocol", kProtocolVersion}});
  snapshot_ = await_join_reply(timeout).payload;
}

void RtiClient::read_loop() {
  FrameDecoder dec;
  char buf[16384];
  try {
    for (;;) {
      const std::size_t n = socket_.read_some(buf, sizeof buf);
      if (n == 0) break;
      dec.feed({buf, n});
      while (auto m = dec.next()) {
        if (m->type == MsgType::RESIGN && m->federate_id == kRtiId &&
            m->payload.value("federate", "") == id_) {
          forced_out_ = true;
          lost_ = true;
        }
        std::lock_guard lock(inbox_mutex_);
        inbox_.push_back(std::move(*m));
        inbox_cv_.notify_all();
      }
    }
  } catch (const std::exception&) {
  }
  lost_ = true;
  inbox_cv_.notify_all();
}

void RtiClient::heartbeat_loop() {
  const auto period = std::chrono::duration<double>(heartbeat_interval_);
  std::unique_lock lock(hb_mutex_);
  while (!closing_) {
    hb_cv_.wait_for(lock, period, [&] { return closing_.load(); });
    if (closing_) break;
    if (heartbeats_ && !lost_) send(MsgType::HEARTBEAT, 0.0, json::object());
  }
}

}  // namespace harbour::rti
