#include "harbour/rti/service.hpp"

#include <spdlog/spdlog.h>

namespace harbour::rti {

LocalService::LocalService(const net::Endpoint& ep, Handler handler, std::string name)
    : listener_(net::Listener::bind(ep)), handler_(std::move(handler)), name_(std::move(name)) {}

LocalService::~LocalService() { stop(); }

void LocalService::start() {
  if (running_.exchange(true)) return;
  acceptor_ = std::thread([this] {
    while (running_) {
      net::Socket s = listener_.accept();
      if (!s.valid()) break;
      std::lock_guard lock(mutex_);
      // Reap finished connections.
      for (auto it = conns_.begin(); it != conns_.end();) {
        if (it->done) {
          it->thread.join();
          it = conns_.erase(it);
        } else {
          ++it;
        }
      }
      Conn& c = conns_.emplace_back();
      c.socket = std::move(s);
      c.thread = std::thread([this, &c] { serve(c); });
    }
  });
}

void LocalService::stop() {
  if (!running_.exchange(false)) return;
  listener_.shutdown();
  if (acceptor_.joinable()) acceptor_.join();
  std::lock_guard lock(mutex_);
  for (auto& c : conns_) c.socket.shutdown();
  for (auto& c : conns_) {
    if (c.thread.joinable()) c.thread.join();
  }
  conns_.clear();
}

void LocalService::serve(Conn& c) {
  FrameDecoder dec;
  char buf[16384];
  std::uint64_t seq = 0;
  try {
    for (;;) {
      const std::size_t n = c.socket.read_some(buf, sizeof buf);
      if (n == 0) break;
      dec.feed({buf, n});
      for (;;) {
        std::optional<FedMessage> m;
        try {
          m = dec.next();
        } catch (const MalformedFrame& e) {
          c.socket.write_all(encode(make_message(MsgType::ERROR, name_, 0.0, ++seq,
                                                 {{"code", "malformed_frame"}, {"message", e.what()}})));
          throw;
        }
        if (!m) break;
        std::string out;
        for (auto& r : handler_(*m)) {
          r.seq = ++seq;
          out += encode(r);
        }
        c.socket.write_all(out);
      }
    }
  } catch (const std::exception& e) {
    spdlog::debug("{}: connection closed: {}", name_, e.what());
  }
  c.socket.shutdown();
  c.done = true;
}

LocalClient::LocalClient(const net::Endpoint& ep, std::chrono::milliseconds timeout)
    : socket_(net::Socket::connect(ep, timeout)) {}

FedMessage LocalClient::request(MsgType type, nlohmann::json payload,
                                std::chrono::milliseconds timeout) {
  socket_.write_all(encode(make_message(type, "client", 0.0, ++seq_, std::move(payload))));
  char buf[16384];
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (auto m = decoder_.next()) return *m;
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0 || !socket_.wait_readable(left)) {
      throw net::NetError(std::string("no reply to ") + to_string(type));
    }
    const std::size_t n = socket_.read_some(buf, sizeof buf);
    if (n == 0) throw net::NetError("connection closed");
    decoder_.feed({buf, n});
  }
}

}  // namespace harbour::rti
