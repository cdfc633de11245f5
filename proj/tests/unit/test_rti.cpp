#include <chrono>
#include <thread>

#include "doctest.h"
#include "harbour/rti/client.hpp"
#include "harbour/rti/router.hpp"
#include "harbour/rti/server.hpp"
#include "harbour/rti/service.hpp"

using namespace harbour;
using namespace harbour::rti;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

FedMessage msg(MsgType t, const std::string& id, std::uint64_t seq, json payload = json::object(),
               double time = 0.0) {
  return make_message(t, id, time, seq, std::move(payload));
}

json join_payload() { return {{"protocol", kProtocolVersion}}; }

std::vector<Outgoing> only(const std::vector<Outgoing>& out, MsgType t) {
  std::vector<Outgoing> r;
  for (const auto& o : out) {
    if (o.msg.type == t) r.push_back(o);
  }
  return r;
}

}  // namespace

TEST_CASE("codec round trip and framing") {
  json attrs;
  for (const char* k : {"x", "y", "psi", "u", "v", "r", "delta", "n", "heave", "pitch", "roll", "sog"}) {
    attrs[k] = 0.1 + static_cast<double>(attrs.size()) / 3.0;
  }
  const FedMessage m = msg(MsgType::UPDATE, "bridge-1", 7, {{"instance", "kriso-1"}, {"attributes", attrs}}, 12.5);
  const std::string frame = encode(m);
  const FedMessage back = decode(frame);
  CHECK(back == m);
  CHECK(back.payload.at("attributes") == attrs);
  CHECK(back.sim_time == 12.5);
  // Fixed layout: sorted keys, no whitespace.
  CHECK(encode_body(msg(MsgType::HEARTBEAT, "a", 3)) ==
        R"({"federate":"a","payload":{},"seq":3,"time":0.0,"type":"HEARTBEAT"})");
  CHECK(static_cast<unsigned char>(frame[0]) == ((frame.size() - 4) >> 24));
  CHECK(static_cast<unsigned char>(frame[3]) == ((frame.size() - 4) & 0xFF));

  CHECK_THROWS_AS(decode(std::string("\0\0\0\0", 4)), MalformedFrame);
  CHECK_THROWS_AS(decode("\0\0\0\x05{}"), MalformedFrame);
  CHECK_THROWS_AS(decode_body(R"({"federate":"a","payload":{},"seq":3,"time":0,"type":"BOGUS"})"),
                  MalformedFrame);
  CHECK_THROWS_AS(decode_body("{\"federate\":\"\xff\",\"payload\":{},\"seq\":3,\"time\":0,\"type\":\"JOIN\"}"),
                  MalformedFrame);
  CHECK_THROWS_AS(decode_body(R"({"federate":"a","payload":{},"seq":-1,"time":0,"type":"JOIN"})"),
                  MalformedFrame);
  CHECK_THROWS_AS(decode_body(R"({"federate":"a","payload":{},"seq":1,"time":-2,"type":"JOIN"})"),
                  MalformedFrame);
  CHECK_THROWS_AS(decode_body(R"({"federate":"a","payload":[],"seq":1,"time":0,"type":"JOIN"})"),
                  MalformedFrame);
  CHECK_THROWS_AS(decode_body("[1]"), MalformedFrame);
  CHECK(valid_utf8("h\xc3\xa9llo"));
  CHECK_FALSE(valid_utf8("\xc0\xaf"));
  CHECK_FALSE(valid_utf8("\xed\xa0\x80"));

  // Byte-at-a-time feeding yields the same messages.
  FrameDecoder dec;
  const std::string two = frame + encode(msg(MsgType::HEARTBEAT, "b", 1));
  std::vector<FedMessage> got;
  for (char c : two) {
    dec.feed({&c, 1});
    while (auto x = dec.next()) got.push_back(*x);
  }
  REQUIRE(got.size() == 2);
  CHECK(got[0] == m);
  CHECK(dec.buffered() == 0);
  FrameDecoder zero;
  zero.feed(std::string("\0\0\0\0", 4));
  CHECK_THROWS_AS(zero.next(), MalformedFrame);
}

TEST_CASE("router fan-out, ownership and snapshots") {
  Router r;
  CHECK(only(r.handle(1, msg(MsgType::JOIN, "bridge", 1, join_payload()), 0), MsgType::JOIN_ACK).size() == 1);
  r.handle(2, msg(MsgType::JOIN, "tower", 1, join_payload()), 0);
  r.handle(3, msg(MsgType::JOIN, "logger", 1, join_payload()), 0);
  r.handle(1, msg(MsgType::PUBLISH, "bridge", 2,
                  {{"class", "ShipState"}, {"instance", "k1"}, {"attributes", {"x", "y"}}}), 0);
  r.handle(1, msg(MsgType::SUBSCRIBE, "bridge", 3, {{"class", "ShipState"}}), 0);
  r.handle(2, msg(MsgType::SUBSCRIBE, "tower", 2, {{"class", "ShipState"}}), 0);
  r.handle(3, msg(MsgType::SUBSCRIBE, "logger", 2, {{"class", "ShipState"}}), 0);

  const auto up = msg(MsgType::UPDATE, "bridge", 4, {{"instance", "k1"}, {"attributes", {{"x", 1.0}}}}, 0.1);
  const auto out = r.handle(1, up, 0.1);
  REQUIRE(out.size() == 2);
  for (const auto& o : out) {
    CHECK(o.to != 1);  // never delivered back to the publisher
    CHECK(o.msg == up);
  }

  // Update from a non-owner: error to the sender, no fan-out.
  const auto bad = r.handle(2, msg(MsgType::UPDATE, "tower", 3, {{"instance", "k1"}, {"attributes", {{"x", 5.0}}}}), 0.2);
  REQUIRE(bad.size() == 1);
  CHECK(bad[0].to == 2);
  CHECK(bad[0].msg.type == MsgType::ERROR);
  CHECK(bad[0].msg.payload["code"] == "not_owner");
  CHECK(r.objects().at("k1").attributes["x"] == 1.0);
  // Unknown attribute and unowned publish.
  CHECK(r.handle(1, msg(MsgType::UPDATE, "bridge", 5, {{"instance", "k1"}, {"attributes", {{"z", 1}}}}), 0)[0]
            .msg.payload["code"] == "unknown_attribute");
  CHECK(r.handle(2, msg(MsgType::PUBLISH, "tower", 4,
                        {{"class", "ShipState"}, {"instance", "k1"}, {"attributes", {"x"}}}), 0)[0]
            .msg.payload["code"] == "ownership");

  // Late joiner snapshot holds the publisher's last values.
  r.handle(1, msg(MsgType::UPDATE, "bridge", 6, {{"instance", "k1"}, {"attributes", {{"x", 2.0}, {"y", 3.0}}}}, 0.3), 0.3);
  r.handle(1, msg(MsgType::UPDATE, "bridge", 7, {{"instance", "k1"}, {"attributes", {{"x", 4.0}}}}, 0.4), 0.4);
  const auto ack = r.handle(4, msg(MsgType::JOIN, "late", 1, join_payload()), 0.5);
  REQUIRE(ack.size() == 1);
  const json obj = ack[0].msg.payload["objects"][0];
  CHECK(obj["instance"] == "k1");
  CHECK(obj["owner"] == "bridge");
  CHECK(obj["attributes"] == json{{"x", 4.0}, {"y", 3.0}});
  CHECK(obj["time"] == 0.4);
  // Quiet system: joining twice gives the same snapshot.
  r.handle(4, msg(MsgType::RESIGN, "late", 2), 0.5);
  const auto ack2 = r.handle(5, msg(MsgType::JOIN, "late", 1, join_payload()), 0.5);
  CHECK(ack2[0].msg.payload == ack[0].msg.payload);
}

TEST_CASE("router protocol errors") {
  Router r;
  r.handle(1, msg(MsgType::JOIN, "a", 1, join_payload()), 0);
  CHECK(r.handle(2, msg(MsgType::JOIN, "a", 1, join_payload()), 0)[0].msg.payload["code"] == "duplicate_id");
  CHECK(r.handle(3, msg(MsgType::JOIN, "b", 1, {{"protocol", 99}}), 0)[0].msg.payload["code"] ==
        "protocol_version");
  CHECK(r.handle(3, msg(MsgType::JOIN, "rti", 1, join_payload()), 0)[0].msg.payload["code"] == "bad_id");
  CHECK(r.handle(3, msg(MsgType::HEARTBEAT, "b", 2), 0)[0].msg.payload["code"] == "not_joined");
  CHECK(r.handle(1, msg(MsgType::HEARTBEAT, "a", 1), 0)[0].msg.payload["code"] == "seq_order");
  CHECK(r.handle(1, msg(MsgType::SNAPSHOT, "a", 2), 0)[0].msg.payload["code"] == "unexpected_type");

  // Interactions: declared receivers must be subscribed.
  r.handle(3, msg(MsgType::JOIN, "b", 1, join_payload()), 0);
  const auto err = r.handle(1, msg(MsgType::INTERACTION, "a", 3, {{"class", "Clearance"}, {"to", {"b"}}}), 0);
  REQUIRE(err.size() == 1);
  CHECK(err[0].msg.payload["code"] == "unsubscribed_target");
  r.handle(3, msg(MsgType::SUBSCRIBE, "b", 2, {{"class", "Clearance"}}), 0);
  const auto ok = r.handle(1, msg(MsgType::INTERACTION, "a", 4, {{"class", "Clearance"}, {"to", {"b"}}}), 0);
  REQUIRE(ok.size() == 1);
  CHECK(ok[0].to == 3);
  CHECK(ok[0].msg.type == MsgType::INTERACTION);
}

TEST_CASE("liveness") {
  Router r(1.0);
  r.handle(1, msg(MsgType::JOIN, "steady", 1, join_payload()), 0);
  r.handle(2, msg(MsgType::JOIN, "silent", 1, join_payload()), 0);
  r.handle(2, msg(MsgType::PUBLISH, "silent", 2,
                  {{"class", "ShipState"}, {"instance", "s1"}, {"attributes", {"x"}}}), 0);
  std::uint64_t seq = 1;
  double resigned_at = -1;
  const double tick = 0.05;
  for (int i = 1; i <= 200; ++i) {
    const double t = i * tick;
    if (i % 20 == 0) r.handle(1, msg(MsgType::HEARTBEAT, "steady", ++seq), t);
    const auto out = r.check_liveness(t);
    if (!only(out, MsgType::RESIGN).empty() && resigned_at < 0) {
      resigned_at = t;
      // Both the remaining federate and the silent one hear about it.
      CHECK(only(out, MsgType::RESIGN).size() == 2);
      CHECK(out[0].msg.payload["forced"] == true);
    }
  }
  CHECK(resigned_at == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(r.federates() == std::vector<std::string>{"steady"});
  CHECK(r.forced_resigns() == std::vector<std::string>{"silent"});
  CHECK(r.objects().at("s1").stale);

  // Fresh JOIN on the same connection, sequence numbers restart.
  const auto ack = r.handle(2, msg(MsgType::JOIN, "silent", 1, join_payload()), 10.0);
  CHECK(ack[0].msg.type == MsgType::JOIN_ACK);
  CHECK(ack[0].msg.payload["objects"][0]["stale"] == true);
  CHECK(r.handle(2, msg(MsgType::PUBLISH, "silent", 2,
                        {{"class", "ShipState"}, {"instance", "s1"}, {"attributes", {"x"}}}), 10.0)
            .empty());
  CHECK_FALSE(r.objects().at("s1").stale);

  // Closing the socket resigns immediately.
  const auto gone = r.disconnect(2);
  REQUIRE(gone.size() == 1);
  CHECK(gone[0].to == 1);
  CHECK(r.objects().at("s1").stale);
}

TEST_CASE("outbound queue coalescing keeps order") {
  OutboundQueue q(4);
  auto up = [](const std::string& inst, std::uint64_t seq) {
    return msg(MsgType::UPDATE, "p", seq, {{"instance", inst}, {"attributes", {{"x", seq}}}});
  };
  CHECK(q.push(up("a", 1)));
  CHECK(q.push(up("b", 2)));
  CHECK(q.push(up("a", 3)));
  CHECK(q.push(up("b", 4)));
  CHECK(q.push(up("a", 5)));  // replaces seq 1
  CHECK(q.dropped() == 1);
  std::vector<std::uint64_t> order;
  while (!q.empty()) order.push_back(q.pop().seq);
  CHECK(order == std::vector<std::uint64_t>{2, 3, 4, 5});

  OutboundQueue full(2);
  full.push(msg(MsgType::INTERACTION, "p", 1));
  full.push(msg(MsgType::INTERACTION, "p", 2));
  CHECK_FALSE(full.push(msg(MsgType::INTERACTION, "p", 3)));
  CHECK_FALSE(full.push(up("a", 4)));
}

TEST_CASE("loopback federation") {
  ServerOptions opt;
  opt.endpoint = {"127.0.0.1", 0};
  opt.heartbeat_interval = 0.2;
  opt.poll_interval = 0.01;
  RtiServer server(opt);
  server.start();
  const net::Endpoint ep{"127.0.0.1", server.port()};

  auto pub = RtiClient::join(ep, "pub");
  auto sub = RtiClient::join(ep, "sub");
  CHECK(pub->join_snapshot()["heartbeat_interval"] == 0.2);
  CHECK(sub->subscribe("ShipState"));
  CHECK(pub->publish("ShipState", "k1", {"x", "pad"}));
  std::this_thread::sleep_for(50ms);
  CHECK(pub->update("k1", 1.5, {{"x", 42.0}}));
  std::optional<FedMessage> got;
  for (int i = 0; i < 50 && !got; ++i) {
    auto m = sub->poll(100ms);
    if (m && m->type == MsgType::UPDATE) got = m;
  }
  REQUIRE(got);
  CHECK(got->payload["attributes"]["x"] == 42.0);
  CHECK(got->federate_id == "pub");

  CHECK_THROWS_AS(RtiClient::join(ep, "pub"), JoinRejected);
  try {
    RtiClient::join(ep, "sub");
  } catch (const JoinRejected& e) {
    CHECK(e.code() == "duplicate_id");
  }

  // Forced silence: resigned after 3 intervals, within a poll tick or two.
  auto mute = RtiClient::join(ep, "mute");
  const auto t0 = std::chrono::steady_clock::now();
  mute->set_heartbeats(false);
  while (!mute->forced_out() && std::chrono::steady_clock::now() - t0 < 3s) {
    std::this_thread::sleep_for(5ms);
  }
  const double waited = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(mute->forced_out());
  CHECK(waited == doctest::Approx(0.6).epsilon(0.15));
  CHECK(server.forced_resigns() == std::vector<std::string>{"mute"});
  mute->set_heartbeats(true);
  mute->rejoin();
  CHECK_FALSE(mute->lost());

  pub->resign();
  sub->resign();
  mute->resign();
  server.stop();
}

TEST_CASE("per-publisher FIFO under queue pressure") {
  ServerOptions opt;
  opt.endpoint = {"127.0.0.1", 0};
  opt.queue_bound = 64;
  RtiServer server(opt);
  server.start();
  const net::Endpoint ep{"127.0.0.1", server.port()};
  auto pub = RtiClient::join(ep, "pub");
  auto sub = RtiClient::join(ep, "sub");
  sub->subscribe("ShipState");
  pub->publish("ShipState", "k1", {"i", "pad"});
  pub->publish("ShipState", "k2", {"i", "pad"});
  std::this_thread::sleep_for(50ms);

  const std::string pad(2000, 'p');
  const int n = 4000;
  std::thread sender([&] {
    for (int i = 1; i <= n; ++i) pub->update(i % 2 ? "k1" : "k2", i * 0.1, {{"i", i}, {"pad", pad}});
  });
  // Let the subscriber's queue overflow before reading.
  std::this_thread::sleep_for(300ms);
  std::uint64_t last_seq = 0;
  int last_i = 0, received = 0;
  bool ordered = true;
  while (last_i < n) {
    auto m = sub->poll(2000ms);
    if (!m) break;
    if (m->type != MsgType::UPDATE) continue;
    ++received;
    ordered = ordered && m->seq > last_seq;
    last_seq = m->seq;
    last_i = m->payload["attributes"]["i"].get<int>();
  }
  sender.join();
  CHECK(ordered);
  CHECK(last_i == n);
  CHECK(received <= n);
  MESSAGE("received " << received << " of " << n << ", coalesced " << server.dropped_updates());
  CHECK(server.dropped_updates() + received >= static_cast<std::uint64_t>(n));
  server.stop();
}

TEST_CASE("local request service") {
  LocalService svc({"127.0.0.1", 0},
                   [](const FedMessage& m) {
                     return std::vector<FedMessage>{
                         make_message(MsgType::SNAPSHOT, "svc", 1.0, 0, {{"echo", to_string(m.type)}})};
                   },
                   "svc");
  svc.start();
  LocalClient c({"127.0.0.1", svc.port()});
  const auto r = c.request(MsgType::SNAPSHOT_REQUEST);
  CHECK(r.type == MsgType::SNAPSHOT);
  CHECK(r.payload["echo"] == "SNAPSHOT_REQUEST");
  CHECK(c.request(MsgType::PICTURE_REQUEST).seq == 2);
  CHECK_THROWS_AS(LocalService({"127.0.0.1", svc.port()}, nullptr, "dup"), net::BindError);
  svc.stop();
}
