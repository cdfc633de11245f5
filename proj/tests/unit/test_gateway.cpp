#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "harbour/gateway/gateway.hpp"

using namespace harbour;
namespace beast = boost::beast;
namespace http = beast::http;
using tcp = boost::asio::ip::tcp;

namespace {

std::vector<rti::FedMessage> echo(const rti::FedMessage& m) {
  if (m.type == rti::MsgType::SNAPSHOT_REQUEST) {
    return {rti::make_message(rti::MsgType::SNAPSHOT, "bridge-k1", 1.5, 0, {{"pushed", true}})};
  }
  return {rti::make_message(rti::MsgType::ORDER_ACK, "bridge-k1", 0.0, 0, {{"echo", m.payload}})};
}

}  // namespace

TEST_CASE("gateway: websocket requests, pushes and static files") {
  const auto dir = std::filesystem::temp_directory_path() / "harbour_test_gateway";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "index.html") << "<html>helm</html>";

  gateway::GatewayOptions opt;
  opt.static_dir = dir.string();
  opt.push_rate = 20.0;
  gateway::Gateway gw(opt, echo);
  gw.start();
  CHECK(gateway::gateway_port(4517) == 5517);

  boost::asio::io_context io;
  tcp::resolver resolver(io);
  const auto eps = resolver.resolve("127.0.0.1", std::to_string(gw.port()));

  SUBCASE("socket") {
    beast::websocket::stream<tcp::socket> ws(io);
    boost::asio::connect(ws.next_layer(), eps);
    ws.handshake("127.0.0.1", "/ws");
    const auto req = rti::make_message(rti::MsgType::HELM_ORDER, "ui", 0.0, 1, {{"rudder_deg", 5}});
    ws.write(boost::asio::buffer(rti::encode_body(req)));
    bool acked = false;
    int pushes = 0;
    for (int i = 0; i < 20 && !(acked && pushes >= 2); ++i) {
      beast::flat_buffer buf;
      ws.read(buf);
      const auto m = rti::decode_body(beast::buffers_to_string(buf.data()));
      if (m.type == rti::MsgType::ORDER_ACK) {
        acked = true;
        CHECK(m.payload["echo"]["rudder_deg"] == 5);
      } else if (m.type == rti::MsgType::SNAPSHOT) {
        ++pushes;
      }
    }
    CHECK(acked);
    CHECK(pushes >= 2);

    ws.write(boost::asio::buffer(std::string("{not json")));
    for (int i = 0; i < 20; ++i) {
      beast::flat_buffer buf;
      ws.read(buf);
      const auto m = rti::decode_body(beast::buffers_to_string(buf.data()));
      if (m.type == rti::MsgType::ERROR) {
        CHECK(m.payload["code"] == "malformed");
        break;
      }
    }
    ws.close(beast::websocket::close_code::normal);
  }

  SUBCASE("static files") {
    auto get = [&](const std::string& target) {
      tcp::socket s(io);
      boost::asio::connect(s, eps);
      http::request<http::empty_body> req{http::verb::get, target, 11};
      req.set(http::field::host, "127.0.0.1");
      http::write(s, req);
      beast::flat_buffer buf;
      http::response<http::string_body> res;
      http::read(s, buf, res);
      return res;
    };
    const auto index = get("/");
    CHECK(index.result() == http::status::ok);
    CHECK(index.body() == "<html>helm</html>");
    CHECK(index[http::field::content_type] == "text/html");
    CHECK(get("/missing.js").result() == http::status::not_found);
    CHECK(get("/../etc/passwd").result() == http::status::bad_request);
  }
  gw.stop();
}
