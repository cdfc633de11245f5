#include "harbour/net/socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

namespace harbour::net {

namespace {

std::string sys_error(const std::string& what) { return what + ": " + std::strerror(errno); }

sockaddr_in resolve(const Endpoint& ep) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  if (ep.host.empty() || ep.host == "0.0.0.0") {
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    return addr;
  }
  if (inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(ep.host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw NetError("cannot resolve host '" + ep.host + "'");
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return addr;
}

}  // namespace

Endpoint parse_endpoint(const std::string& text, const Endpoint& fallback) {
  Endpoint ep = fallback;
  const auto colon = text.rfind(':');
  const std::string host = colon == std::string::npos ? text : text.substr(0, colon);
  if (!host.empty()) ep.host = host;
  if (colon != std::string::npos) {
    const std::string port = text.substr(colon + 1);
    unsigned v = 0;
    const auto [p, ec] = std::from_chars(port.data(), port.data() + port.size(), v);
    if (ec != std::errc{} || p != port.data() + port.size() || v > 65535) {
      throw ConfigError("bad port in endpoint '" + text + "'");
    }
    ep.port = static_cast<std::uint16_t>(v);
  }
  return ep;
}

Socket& Socket::operator=(Socket&& o) noexcept {
  if (this != &o) {
    close();
    fd_ = o.fd_;
    o.fd_ = -1;
  }
  return *this;
}

Socket Socket::connect(const Endpoint& ep, std::chrono::milliseconds timeout) {
  const sockaddr_in addr = resolve(ep);
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw NetError(sys_error("socket"));
  const int flags = fcntl(s.fd_, F_GETFL, 0);
  fcntl(s.fd_, F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(s.fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr);
  if (rc != 0 && errno != EINPROGRESS) {
    throw NetError(sys_error("connect " + ep.host + ":" + std::to_string(ep.port)));
  }
  if (rc != 0) {
    pollfd p{s.fd_, POLLOUT, 0};
    rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    int err = 0;
    socklen_t len = sizeof err;
    getsockopt(s.fd_, SOL_SOCKET, SO_ERROR, &err, &len);
    if (rc <= 0 || err != 0) {
      errno = rc == 0 ? ETIMEDOUT : err;
      throw NetError(sys_error("connect " + ep.host + ":" + std::to_string(ep.port)));
    }
  }
  fcntl(s.fd_, F_SETFL, flags);
  const int one = 1;
  setsockopt(s.fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return s;
}

std::size_t Socket::read_some(char* buf, std::size_t n) {
  for (;;) {
    const ssize_t r = ::recv(fd_, buf, n, 0);
    if (r >= 0) return static_cast<std::size_t>(r);
    if (errno == EINTR) continue;
    if (errno == ECONNRESET || errno == EBADF || errno == ENOTCONN) return 0;
    throw NetError(sys_error("recv"));
  }
}

bool Socket::wait_readable(std::chrono::milliseconds timeout) const {
  pollfd p{fd_, POLLIN, 0};
  for (;;) {
    const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc < 0 && errno == EINTR) continue;
    return rc > 0;
  }
}

void Socket::write_all(std::string_view data) {
  while (!data.empty()) {
    const ssize_t w = ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw NetError(sys_error("send"));
    }
    data.remove_prefix(static_cast<std::size_t>(w));
  }
}

void Socket::shutdown() {
  if (valid()) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::close() {
  if (valid()) {
    ::close(fd_);
    fd_ = -1;
  }
}

Listener Listener::bind(const Endpoint& ep) {
  const sockaddr_in addr = resolve(ep);
  Listener l;
  l.sock_ = Socket(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!l.sock_.valid()) throw BindError(sys_error("socket"));
  const int one = 1;
  setsockopt(l.sock_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(l.sock_.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    throw BindError(sys_error("bind " + ep.host + ":" + std::to_string(ep.port)));
  }
  if (::listen(l.sock_.fd(), 64) != 0) throw BindError(sys_error("listen"));
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  getsockname(l.sock_.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
  l.port_ = ntohs(bound.sin_port);
  return l;
}

Socket Listener::accept() {
  for (;;) {
    const int fd = ::accept4(sock_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
    if (fd >= 0) {
      const int one = 1;
      setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return Socket(fd);
    }
    if (errno == EINTR || errno == ECONNABORTED) continue;
    return Socket();
  }
}

void Listener::shutdown() { sock_.shutdown(); }

}  // namespace harbour::net
