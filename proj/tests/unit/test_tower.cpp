#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "doctest.h"
#include "harbour/bridge/runner.hpp"
#include "harbour/rti/server.hpp"
#include "harbour/rti/service.hpp"
#include "harbour/tower/runner.hpp"

using namespace harbour;
using namespace harbour::tower;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kData = HARBOUR_DATA_DIR;

json state(double x, double y, double psi_deg, double sog, double draft = 10.79) {
  return {{"x", x},           {"y", y},         {"psi", deg2rad(psi_deg)}, {"sog", sog},
          {"cog", 0.0},       {"length", 230.0}, {"beam", 32.2},           {"draft", draft}};
}

ShipView view(const std::string& id, double t, double x, double y, double psi_deg, double sog,
              double draft = 10.79) {
  return {id, t, x, y, deg2rad(psi_deg), sog, 230.0, 32.2, draft};
}

scenario::Scenario harbour_scenario(json ships = json::array()) {
  json doc{{"version", 1}, {"name", "tower-test"}, {"port", "../ports/salerno.geo"}, {"ships", ships}};
  return scenario::parse_scenario(doc.dump(), "tower-test.json", kData + "/scenarios");
}

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "harbour_test_tower";
  fs::create_directories(dir);
  return dir / name;
}

std::size_t count(const std::vector<TowerEvent>& ev, EventKind k) {
  return static_cast<std::size_t>(
      std::count_if(ev.begin(), ev.end(), [&](const TowerEvent& e) { return e.kind == k; }));
}

}  // namespace

TEST_CASE("traffic picture: latest sim time wins, partial updates merge") {
  TrafficPicture pic(5, 1.0);
  const auto t0 = Clock::now();
  CHECK(pic.ingest("a", "bridge-a", 1.0, state(0, 0, 0, 1), t0) == TrafficPicture::Ingest::created);
  CHECK(pic.ingest("a", "bridge-a", 2.0, {{"x", 5.0}}, t0) == TrafficPicture::Ingest::updated);
  CHECK(pic.find("a")->view.x == 5.0);
  CHECK(pic.find("a")->attributes["beam"] == 32.2);
  CHECK(pic.ingest("a", "bridge-a", 1.5, {{"x", 9.0}}, t0) == TrafficPicture::Ingest::older_ignored);
  CHECK(pic.find("a")->view.x == 5.0);
  CHECK(pic.ingest("b", "bridge-b", 0.0, {{"x", 1.0}}, t0) == TrafficPicture::Ingest::invalid);
  CHECK(pic.find("b") == nullptr);

  SUBCASE("tracks are decimated and bounded") {
    for (int i = 0; i < 100; ++i) pic.ingest("a", "bridge-a", 2.0 + 0.1 * i, {{"x", 1.0 * i}}, t0);
    const auto& tr = pic.find("a")->track;
    CHECK(tr.size() == 5);
    for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr[i].t - tr[i - 1].t >= 1.0 - 1e-9);
  }
  SUBCASE("offline ships leave the rule views but keep their record") {
    pic.ingest("c", "bridge-c", 0.0, state(10, 10, 0, 0), t0);
    pic.set_offline("bridge-a");
    const auto v = pic.views();
    REQUIRE(v.size() == 1);
    CHECK(v[0].id == "c");
    CHECK(pic.find("a")->offline);
    // A restarted bridge starts its clock over and is accepted again.
    CHECK(pic.ingest("a", "bridge-a", 0.0, state(0, 0, 0, 0), t0) == TrafficPicture::Ingest::updated);
    CHECK_FALSE(pic.find("a")->offline);
  }
  SUBCASE("staleness is measured on the receive clock") {
    const auto later = t0 + std::chrono::milliseconds(1500);
    CHECK(pic.find("a")->staleness(later) == doctest::Approx(1.5));
    CHECK(pic.to_json(later, false)["ships"][0]["staleness"] == doctest::Approx(1.5));
  }
}

TEST_CASE("two scripted ships in the channel raise one violation per episode") {
  const auto sc = scenario::load_scenario(kData + "/scenarios/channel_two_ships.json");
  std::vector<std::unique_ptr<bridge::ShipSession>> ships;
  for (const auto& s : sc.ships) ships.push_back(std::make_unique<bridge::ShipSession>(sc, s.id));
  RuleEngine engine(sc);
  TrafficPicture pic;
  std::vector<TowerEvent> events;
  bool prev = false;
  int episodes = 0;
  // 10 Hz picture over 10 minutes of simulated time.
  for (int k = 0; k <= 12000; ++k) {
    if (k % 2 == 0) {
      std::vector<port::Footprint> fps;
      for (auto& s : ships) {
        const auto snap = s->snapshot();
        pic.ingest(snap.ship, "bridge-" + snap.ship, snap.sim_time, bridge::to_json(snap), Clock::now());
        fps.push_back({snap.ship, {snap.state.x, snap.state.y}, snap.state.psi, snap.length, snap.beam});
      }
      const bool crowded = port::channel_occupancy(fps, sc.port).size() > 1;
      if (crowded && !prev) ++episodes;
      prev = crowded;
      for (auto& e : engine.evaluate(pic.views())) events.push_back(std::move(e));
    }
    for (auto& s : ships) s->step();
  }
  CHECK(episodes == 1);
  CHECK(count(events, EventKind::channel_violation) == 1);
  CHECK(count(events, EventKind::collision) == 0);
  CHECK(count(events, EventKind::grounding) == 0);
  const auto& e = *std::find_if(events.begin(), events.end(),
                                [](const auto& e) { return e.kind == EventKind::channel_violation; });
  CHECK(e.ids == std::vector<std::string>{"follow", "lead"});
  CHECK(e.value == 2.0);
  CHECK(e.time > 0.0);
}

TEST_CASE("channel violation rearms after the channel clears") {
  RuleEngine engine(harbour_scenario());
  std::vector<TowerEvent> ev;
  auto run = [&](std::vector<ShipView> v) {
    for (auto& e : engine.evaluate(v)) ev.push_back(e);
  };
  const auto a_in = view("a", 0, -1500, 1950, 0, 3);
  const auto b_in = view("b", 0, -1000, 1950, 0, 3);
  const auto b_out = view("b", 0, -2600, 1950, 0, 3);
  run({a_in, b_in});
  run({a_in, b_in});
  run({a_in, b_out});
  run({a_in, b_in});
  run({a_in, b_in});
  CHECK(count(ev, EventKind::channel_violation) == 2);
}

TEST_CASE("grounding fires on the depth boundary crossing") {
  // Northbound along the channel axis out of the 16 m roads.
  auto approach = [](double draft) {
    RuleEngine engine(harbour_scenario());
    std::vector<double> at;
    for (double x = -2400; x <= -1600; x += 0.5) {
      const std::vector<ShipView> v{view("deep", 0, x, 1950, 0, 3, draft)};
      for (const auto& e : engine.evaluate(v)) {
        CHECK(e.kind == EventKind::grounding);
        at.push_back(x);
      }
    }
    return at;
  };
  const auto deep = approach(13.5);
  REQUIRE(deep.size() == 1);
  // Bow corners at x + L/2 reach the 13 m channel at x = -2000.
  CHECK(deep[0] + 115.0 >= -2000.0);
  CHECK(deep[0] + 115.0 <= -2000.0 + 0.5);
  CHECK(approach(12.9).empty());

  // Default draft swinging in the 12 m evolution area.
  RuleEngine engine(harbour_scenario());
  for (double hdg = 0; hdg < 360; hdg += 5) {
    const std::vector<ShipView> v{view("k", 0, -100, 1950, hdg, 0)};
    CHECK(engine.evaluate(v).empty());
  }
}

TEST_CASE("speed limit applies inside the harbour, once per episode") {
  RuleEngine engine(harbour_scenario());
  const double limit = 8.0 * kKnot;
  std::vector<TowerEvent> ev;
  auto at = [&](double x, double y, double sog) {
    const std::vector<ShipView> v{view("s", 0, x, y, 0, sog)};
    for (auto& e : engine.evaluate(v)) ev.push_back(e);
  };
  at(-2500, 1950, 2 * limit);  // roads, outside the harbour
  CHECK(ev.empty());
  at(200, 1950, limit * 1.01);
  at(210, 1950, limit * 1.2);
  at(220, 1950, limit);  // at the limit is allowed
  at(230, 1950, limit * 1.1);
  CHECK(count(ev, EventKind::speed_violation) == 2);
  CHECK(ev[0].value == doctest::Approx(8.08));
}

TEST_CASE("missions and metrics") {
  json ships = json::array();
  for (const char* id : {"p1", "p2"}) {
    ships.push_back({{"id", id},
                     {"config", "../ships/kriso.cfg"},
                     {"initial", {{"x_m", -1800}, {"y_m", 1950}, {"heading_deg", 0}, {"speed_kn", 0}}},
                     {"mission", {{"berth", "Trapezio_1"}}}});
  }
  RuleEngine engine(harbour_scenario(ships));
  std::vector<TowerEvent> ev;
  auto feed = [&](std::vector<ShipView> v) {
    for (auto& e : engine.evaluate(v)) ev.push_back(e);
  };
  feed({view("p1", 100, 0, 1950, 0, 2), view("p2", 100, 0, 1600, 0, 2)});
  // Near the berth but too fast.
  feed({view("p1", 590, 680, 820, 90, 1.0)});
  CHECK(ev.empty());
  feed({view("p1", 600, 680, 820, 90, 0.1)});
  feed({view("p1", 610, 680, 800, 90, 0.0)});
  feed({view("p2", 700, 680, 760, 90, 0.2)});
  feed({view("p2", 710, 680, 800, 90, 0.0)});
  REQUIRE(count(ev, EventKind::mission_complete) == 2);

  const auto m = compute_metrics(ev);
  CHECK(m.missions.size() == 2);
  CHECK(m.mission_mean == 650.0);
  CHECK(m.mission_std == 50.0);

  SUBCASE("single mission has zero spread") {
    const std::vector<TowerEvent> one{ev[0]};
    CHECK(compute_metrics(one).mission_std == 0.0);
  }
  SUBCASE("metrics from the persisted log equal the live ones") {
    ev.push_back({EventKind::speed_violation, 12.3456789012345, {"p1"}, {1.0 / 3.0, 2.0 / 7.0}, 8.123456789});
    ev.push_back({EventKind::channel_violation, 99.1, {"p1", "p2"}, {-1000, 1950}, 2});
    const auto path = temp_file("events.jsonl").string();
    {
      EventLogWriter w(path);
      for (const auto& e : ev) w.append(e);
    }
    const auto back = read_event_log(path);
    REQUIRE(back.size() == ev.size());
    for (std::size_t i = 0; i < ev.size(); ++i) {
      CHECK(back[i].time == ev[i].time);
      CHECK(back[i].point.x == ev[i].point.x);
      CHECK(back[i].value == ev[i].value);
    }
    CHECK(compute_metrics(back) == compute_metrics(ev));
    CHECK(to_json(compute_metrics(back)) == to_json(compute_metrics(ev)));
    CHECK(compute_metrics(back).wrong_manoeuvres() == 2);

    // An interrupted final write is tolerated, garbage in the middle is not.
    std::ofstream(path, std::ios::app) << "{\"kind\":\"colli";
    CHECK(read_event_log(path).size() == ev.size());
    std::ofstream(path, std::ios::app) << "\n" << to_json(ev[0]).dump() << "\n";
    CHECK_THROWS_AS(read_event_log(path), ParseError);
  }
}

TEST_CASE("loopback federation: bridge and tower") {
  rti::ServerOptions so;
  so.endpoint = {"127.0.0.1", 0};
  so.poll_interval = 0.02;
  rti::RtiServer server(so);
  server.start();
  const net::Endpoint ep{"127.0.0.1", server.port()};

  json ships = json::array();
  ships.push_back({{"id", "k1"},
                   {"config", "../ships/kriso.cfg"},
                   {"initial", {{"x_m", -1800}, {"y_m", 1950}, {"heading_deg", 0}, {"speed_kn", 6}}}});
  const auto sc = harbour_scenario(ships);

  TowerOptions topt;
  topt.rti = ep;
  topt.query = net::Endpoint{"127.0.0.1", 0};
  topt.event_log = temp_file("live.jsonl").string();
  TowerRunner tower(sc, topt);
  tower.start();
  rti::LocalClient q({"127.0.0.1", tower.query_port()});

  const auto unknown = q.request(rti::MsgType::TELEPORT_REQUEST, {{"ship", "k1"}});
  CHECK(unknown.type == rti::MsgType::ERROR);
  CHECK(unknown.payload["code"] == "ship_unknown");

  bridge::BridgeOptions bopt;
  bopt.ship_id = "k1";
  bopt.time_scale = 1.0;
  bopt.control.reset();
  bopt.rti = ep;
  auto bridge = std::make_unique<bridge::BridgeRunner>(sc, bopt);
  bridge->start();

  // Steady state: sample the picture for two seconds.
  std::this_thread::sleep_for(std::chrono::milliseconds(500));
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto pic = q.request(rti::MsgType::PICTURE_REQUEST);
    REQUIRE(pic.type == rti::MsgType::PICTURE);
    REQUIRE(pic.payload["ships"].size() == 1);
    worst = std::max(worst, pic.payload["ships"][0]["staleness"].get<double>());
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  CHECK(worst <= 0.5);

  const auto tp = q.request(rti::MsgType::TELEPORT_REQUEST, {{"ship", "k1"}});
  REQUIRE(tp.type == rti::MsgType::TELEPORT);
  CHECK_FALSE(tp.payload["degraded"].get<bool>());
  CHECK(tp.payload["conning"]["step"].get<double>() * 0.05 == doctest::Approx(tp.sim_time));
  CHECK(tp.payload["conning"]["length"] == 230.0);

  // Instructor change reaches the bridge through the federation.
  const auto ack = q.request(rti::MsgType::INSTRUCTOR_SET_ENVIRONMENT,
                             {{"environment", {{"wind_speed_ms", 12}}}});
  CHECK(ack.payload["forwarded"] == true);
  for (int i = 0; i < 100 && bridge->snapshot()->environment.wind_speed != 12.0; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  CHECK(bridge->snapshot()->environment.wind_speed == 12.0);
  const auto bad = q.request(rti::MsgType::INSTRUCTOR_SET_ENVIRONMENT,
                             {{"environment", {{"wind_speed_ms", "gale"}}}});
  CHECK(bad.payload["ok"] == false);

  // A resigned bridge leaves a degraded teleport view.
  bridge->stop();
  bridge.reset();
  bool degraded = false;
  for (int i = 0; i < 100 && !degraded; ++i) {
    degraded = q.request(rti::MsgType::TELEPORT_REQUEST, {{"ship", "k1"}}).payload["degraded"].get<bool>();
    if (!degraded) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  CHECK(degraded);

  const auto metrics = q.request(rti::MsgType::METRICS_REQUEST);
  CHECK(metrics.type == rti::MsgType::METRICS);
  CHECK(metrics.payload == to_json(compute_metrics(read_event_log(topt.event_log))));

  tower.stop();
  server.stop();
}
