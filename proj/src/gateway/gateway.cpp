#include "harbour/gateway/gateway.hpp"

#include <spdlog/spdlog.h>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <deque>
#include <filesystem>
#include <thread>

namespace harbour::gateway {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace ws = beast::websocket;
using tcp = asio::ip::tcp;
namespace fs = std::filesystem;

namespace {

const char* mime_type(const fs::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json" || ext == ".geo") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

struct Shared {
  GatewayOptions opt;
  rti::Handler handler;
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, std::shared_ptr<const Shared> shared)
      : ws_(std::move(socket)), timer_(ws_.get_executor()), shared_(std::move(shared)) {}

  void run(http::request<http::string_body> req) {
    ws_.text(true);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->read();
      if (self->shared_->opt.push_rate > 0) self->push();
    });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->timer_.cancel();
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->answer(text);
      self->read();
    });
  }

  void answer(const std::string& text) {
    const auto& name = shared_->opt.name;
    try {
      for (const auto& r : shared_->handler(rti::decode_body(text))) send(rti::encode_body(r));
    } catch (const rti::MalformedFrame& e) {
      send(rti::encode_body(rti::make_message(rti::MsgType::ERROR, name, 0.0, 0,
                                              {{"code", "malformed"}, {"message", e.what()}})));
    } catch (const std::exception& e) {
      send(rti::encode_body(rti::make_message(rti::MsgType::ERROR, name, 0.0, 0,
                                              {{"code", "internal"}, {"message", e.what()}})));
    }
  }

  void push() {
    const auto period = std::chrono::duration<double>(1.0 / shared_->opt.push_rate);
    timer_.expires_after(std::chrono::duration_cast<std::chrono::steady_clock::duration>(period));
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      // Latest state only: skip a tick rather than queue behind a slow client.
      if (self->outbox_.size() < 4) {
        const auto& o = self->shared_->opt;
        try {
          for (const auto& r : self->shared_->handler(
                   rti::make_message(o.push_request, o.name, 0.0, 0, o.push_payload))) {
            self->send(rti::encode_body(r));
          }
        } catch (const std::exception& e) {
          spdlog::warn("{}: push failed: {}", o.name, e.what());
        }
      }
      self->push();
    });
  }

  void send(std::string text) {
    outbox_.push_back(std::move(text));
    if (outbox_.size() == 1) write();
  }

  void write() {
    ws_.async_write(asio::buffer(outbox_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        self->timer_.cancel();
                        return;
                      }
                      self->outbox_.pop_front();
                      if (!self->outbox_.empty()) self->write();
                    });
  }

  ws::stream<beast::tcp_stream> ws_;
  asio::steady_timer timer_;
  std::shared_ptr<const Shared> shared_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, std::shared_ptr<const Shared> shared)
      : stream_(std::move(socket)), shared_(std::move(shared)) {}

  void run() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       if (!ec) self->dispatch();
                     });
  }

 private:
  void dispatch() {
    const std::string target(req_.target());
    if (ws::is_upgrade(req_)) {
      if (target == "/ws") {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), shared_)->run(std::move(req_));
        return;
      }
      return reply(http::status::not_found, "text/plain", "no such socket\n");
    }
    if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
      return reply(http::status::method_not_allowed, "text/plain", "GET only\n");
    }
    if (shared_->opt.static_dir.empty()) {
      return reply(http::status::not_found, "text/plain", "static files disabled\n");
    }
    std::string rel = target.substr(0, target.find('?'));
    if (rel.empty() || rel.back() == '/') rel += "index.html";
    if (rel.find("..") != std::string::npos) {
      return reply(http::status::bad_request, "text/plain", "bad path\n");
    }
    const fs::path file = fs::path(shared_->opt.static_dir) / rel.substr(1);
    http::file_body::value_type body;
    beast::error_code ec;
    body.open(file.c_str(), beast::file_mode::scan, ec);
    if (ec) return reply(http::status::not_found, "text/plain", "not found\n");

    auto res = std::make_shared<http::response<http::file_body>>(
        std::piecewise_construct, std::make_tuple(std::move(body)),
        std::make_tuple(http::status::ok, req_.version()));
    res->set(http::field::content_type, mime_type(file));
    res->prepare_payload();
    res->keep_alive(false);
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      self->stream_.socket().shutdown(tcp::socket::shutdown_send);
    });
  }

  void reply(http::status status, const char* type, std::string text) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::content_type, type);
    res->body() = std::move(text);
    res->prepare_payload();
    res->keep_alive(false);
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      self->stream_.socket().shutdown(tcp::socket::shutdown_send);
    });
  }

  beast::tcp_stream stream_;
  std::shared_ptr<const Shared> shared_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

struct Gateway::Impl {
  asio::io_context io{1};
  tcp::acceptor acceptor{io};
  std::shared_ptr<const Shared> shared;
  std::thread thread;

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<HttpSession>(std::move(socket), shared)->run();
      accept();
    });
  }
};

Gateway::Gateway(GatewayOptions options, rti::Handler handler) : impl_(std::make_unique<Impl>()) {
  const auto ep = options.endpoint;
  impl_->shared = std::make_shared<const Shared>(Shared{std::move(options), std::move(handler)});
  try {
    const tcp::endpoint at(asio::ip::make_address(ep.host), ep.port);
    impl_->acceptor.open(at.protocol());
    impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
    impl_->acceptor.bind(at);
    impl_->acceptor.listen();
  } catch (const boost::system::system_error& e) {
    throw net::BindError("cannot bind gateway on " + ep.host + ":" + std::to_string(ep.port) + ": " +
                         e.what());
  }
}

Gateway::~Gateway() { stop(); }

std::uint16_t Gateway::port() const { return impl_->acceptor.local_endpoint().port(); }

void Gateway::start() {
  if (impl_->thread.joinable()) return;
  impl_->accept();
  impl_->thread = std::thread([this] { impl_->io.run(); });
  spdlog::info("{}: browser socket on ws://{}:{}/ws{}", impl_->shared->opt.name,
               impl_->shared->opt.endpoint.host, port(),
               impl_->shared->opt.static_dir.empty() ? "" : " with static files");
}

void Gateway::stop() {
  if (!impl_->thread.joinable()) return;
  impl_->io.stop();
  impl_->thread.join();
}

}  // namespace harbour::gateway
