#include "harbour/rti/server.hpp"

#include <spdlog/spdlog.h>

namespace harbour::rti {

RtiServer::RtiServer(ServerOptions options)
    : options_(std::move(options)),
      listener_(net::Listener::bind(options_.endpoint)),
      start_(std::chrono::steady_clock::now()),
      router_(options_.heartbeat_interval) {}

RtiServer::~RtiServer() { stop(); }

double RtiServer::now() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
}

void RtiServer::start() {
  if (running_.exchange(true)) return;
  acceptor_ = std::thread([this] { accept_loop(); });
  router_thread_ = std::thread([this] { route_loop(); });
  spdlog::info("rti: listening on {}:{}", options_.endpoint.host, port());
}

void RtiServer::stop() {
  if (!running_.exchange(false)) return;
  listener_.shutdown();
  if (acceptor_.joinable()) acceptor_.join();
  inbox_cv_.notify_all();
  if (router_thread_.joinable()) router_thread_.join();
  std::map<ConnId, std::shared_ptr<Connection>> conns;
  {
    std::lock_guard lock(state_mutex_);
    conns.swap(connections_);
  }
  for (auto& [id, c] : conns) {
    close_connection(c);
    if (c->reader.joinable()) c->reader.join();
    if (c->writer.joinable()) c->writer.join();
  }
}

std::vector<std::string> RtiServer::federates() const {
  std::lock_guard lock(state_mutex_);
  return router_.federates();
}

std::vector<std::string> RtiServer::forced_resigns() const {
  std::lock_guard lock(state_mutex_);
  return router_.forced_resigns();
}

std::uint64_t RtiServer::dropped_updates() const {
  std::lock_guard lock(state_mutex_);
  std::uint64_t n = dropped_;
  for (const auto& [id, c] : connections_) {
    std::lock_guard cl(c->mutex);
    n += c->queue.dropped();
  }
  return n;
}

void RtiServer::accept_loop() {
  while (running_) {
    net::Socket s = listener_.accept();
    if (!s.valid()) break;
    auto c = std::make_shared<Connection>(options_.queue_bound);
    c->socket = std::move(s);
    {
      std::lock_guard lock(state_mutex_);
      c->id = next_id_++;
      connections_[c->id] = c;
    }
    c->reader = std::thread([this, c] { read_loop(c); });
    c->writer = std::thread([this, c] { write_loop(c); });
  }
}

void RtiServer::read_loop(std::shared_ptr<Connection> c) {
  FrameDecoder dec;
  char buf[16384];
  try {
    for (;;) {
      const std::size_t n = c->socket.read_some(buf, sizeof buf);
      if (n == 0) break;
      dec.feed({buf, n});
      while (auto m = dec.next()) {
        std::lock_guard lock(inbox_mutex_);
        inbox_.push_back({c->id, std::move(*m)});
        inbox_cv_.notify_one();
      }
    }
  } catch (const std::exception& e) {
    spdlog::warn("rti: connection {} dropped: {}", c->id, e.what());
  }
  std::lock_guard lock(inbox_mutex_);
  inbox_.push_back({c->id, std::nullopt});
  inbox_cv_.notify_one();
}

void RtiServer::write_loop(std::shared_ptr<Connection> c) {
  for (;;) {
    FedMessage m;
    {
      std::unique_lock lock(c->mutex);
      c->cv.wait(lock, [&] { return c->closed || !c->queue.empty(); });
      if (c->closed) return;
      m = c->queue.pop();
    }
    try {
      c->socket.write_all(encode(m));
    } catch (const std::exception&) {
      close_connection(c);
      return;
    }
  }
}

void RtiServer::close_connection(const std::shared_ptr<Connection>& c) {
  {
    std::lock_guard lock(c->mutex);
    if (c->closed) return;
    c->closed = true;
  }
  c->cv.notify_all();
  c->socket.shutdown();
}

void RtiServer::deliver(const std::vector<Outgoing>& out) {
  // Caller holds state_mutex_.
  for (const auto& o : out) {
    const auto it = connections_.find(o.to);
    if (it == connections_.end()) continue;
    const auto& c = it->second;
    bool ok;
    {
      std::lock_guard lock(c->mutex);
      if (c->closed) continue;
      ok = c->queue.push(o.msg);
    }
    if (ok) {
      c->cv.notify_one();
    } else {
      spdlog::warn("rti: connection {} cannot keep up with {}; closing", c->id,
                   to_string(o.msg.type));
      close_connection(c);
    }
  }
}

void RtiServer::route_loop() {
  const auto tick = std::chrono::duration<double>(options_.poll_interval);
  while (running_) {
    std::deque<Inbound> batch;
    {
      std::unique_lock lock(inbox_mutex_);
      inbox_cv_.wait_for(lock, tick, [&] { return !inbox_.empty() || !running_; });
      batch.swap(inbox_);
    }
    std::vector<std::shared_ptr<Connection>> finished;
    {
      std::lock_guard lock(state_mutex_);
      for (auto& in : batch) {
        if (in.msg) {
          const auto before = router_.joined(in.msg->federate_id);
          deliver(router_.handle(in.from, *in.msg, now()));
          if (!before && in.msg->type == MsgType::JOIN && router_.joined(in.msg->federate_id)) {
            spdlog::info("rti: '{}' joined", in.msg->federate_id);
          }
        } else {
          deliver(router_.disconnect(in.from));
          const auto it = connections_.find(in.from);
          if (it != connections_.end()) {
            finished.push_back(it->second);
            dropped_ += [&] {
              std::lock_guard cl(it->second->mutex);
              return it->second->queue.dropped();
            }();
            connections_.erase(it);
          }
        }
      }
      const auto before = router_.forced_resigns().size();
      deliver(router_.check_liveness(now()));
      for (auto i = before; i < router_.forced_resigns().size(); ++i) {
        spdlog::warn("rti: '{}' silent for 3 heartbeat intervals; resigned",
                     router_.forced_resigns()[i]);
      }
    }
    for (auto& c : finished) {
      close_connection(c);
      if (c->reader.joinable()) c->reader.join();
      if (c->writer.joinable()) c->writer.join();
    }
  }
}

}  // namespace harbour::rti
