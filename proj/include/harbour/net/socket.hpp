#pragma once

// Blocking TCP sockets (POSIX), move-only RAII wrappers.

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

#include "harbour/common/error.hpp"

namespace harbour::net {

class NetError : public Error {
 public:
  using Error::Error;
};

/// The listening port could not be bound.
class BindError : public NetError {
 public:
  using NetError::NetError;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// "host:port", "host" or ":port"; missing parts come from `fallback`.
/// Throws ConfigError.
Endpoint parse_endpoint(const std::string& text, const Endpoint& fallback);

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  /// Throws NetError when nothing accepts within the timeout.
  static Socket connect(const Endpoint& ep,
                        std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }

  /// Bytes read, 0 at end of stream. Throws NetError.
  std::size_t read_some(char* buf, std::size_t n);
  /// Waits up to `timeout` for readable data; false on timeout.
  bool wait_readable(std::chrono::milliseconds timeout) const;
  /// Throws NetError (the peer went away).
  void write_all(std::string_view data);

  /// Wakes any thread blocked on this socket; the descriptor stays open.
  void shutdown();
  void close();

 private:
  int fd_ = -1;
};

class Listener {
 public:
  Listener() = default;
  Listener(Listener&&) = default;
  Listener& operator=(Listener&&) = default;

  /// Port 0 picks a free port. Throws BindError.
  static Listener bind(const Endpoint& ep);

  std::uint16_t port() const { return port_; }
  /// Invalid socket once shutdown() was called.
  Socket accept();
  void shutdown();

 private:
  Socket sock_;
  std::uint16_t port_ = 0;
};

}  // namespace harbour::net
