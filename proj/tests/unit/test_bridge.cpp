#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "harbour/bridge/order_log.hpp"
#include "harbour/bridge/runner.hpp"
#include "harbour/rti/server.hpp"

using namespace harbour;
using namespace harbour::bridge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kData = HARBOUR_DATA_DIR;

json ship_json(double x, double y, double heading_deg, double speed_kn) {
  return {{"id", "k1"},
          {"config", "../ships/kriso.cfg"},
          {"initial", {{"x_m", x}, {"y_m", y}, {"heading_deg", heading_deg}, {"speed_kn", speed_kn}}}};
}

scenario::Scenario make_scenario(json ship, json environment = json::object()) {
  json doc{{"version", 1},
           {"name", "bridge-test"},
           {"port", "../ports/salerno.geo"},
           {"environment", std::move(environment)},
           {"ships", {std::move(ship)}}};
  return scenario::parse_scenario(doc.dump(), "bridge-test.json", kData + "/scenarios");
}

scenario::HelmOrder order(const json& j) { return scenario::parse_order(j); }

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "harbour_test_bridge";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("rudder order slews from the next step at the configured rate") {
  const auto sc = make_scenario(ship_json(-1800, 1950, 0, 6));
  ShipSession s(sc, "k1");
  const double rate = s.ship().config.rudder.max_rate;
  CHECK(rad2deg(rate) == doctest::Approx(2.32));
  while (s.sim_time() < 10.0 - 1e-9) s.step();
  CHECK(s.steps() == 200);
  CHECK(s.state().delta == 0.0);
  s.apply(order({{"rudder_deg", 20}}));
  // The order has not moved anything yet.
  CHECK(s.state().delta == 0.0);
  for (int k = 1; k <= 200; ++k) {
    s.step();
    const double expected = std::min(k * s.dt() * rate, deg2rad(20.0));
    CHECK(s.state().delta == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("order semantics") {
  const auto sc = make_scenario(ship_json(-1800, 1950, 0, 6));
  ShipSession s(sc, "k1");
  const auto& engine = s.ship().config.engine;

  s.apply(order({{"telegraph", "full_ahead"}}));
  CHECK(s.snapshot().shaft_ordered == engine.rated_rate);
  CHECK(s.snapshot().telegraph == scenario::Telegraph::full_ahead);
  s.apply(order({{"telegraph", "half astern"}}));
  CHECK(s.snapshot().shaft_ordered == doctest::Approx(-0.7 * 0.7 * engine.rated_rate));

  // Last writer wins.
  s.apply(order({{"rudder_deg", -30}}));
  s.apply(order({{"rudder_deg", 30}}));
  CHECK(s.snapshot().rudder_ordered == doctest::Approx(deg2rad(30)));

  // Rejections leave every setpoint alone.
  const auto before = s.snapshot();
  CHECK_THROWS_AS(s.apply(order({{"rudder_deg", 36}, {"telegraph", "stop"}})), OrderRejected);
  CHECK_THROWS_AS(s.apply(order({{"shaft_rpm", 1e6}})), OrderRejected);
  CHECK_THROWS_AS(s.apply(order({{"anchor", "drop"}})), OrderRejected);  // 6 kn
  CHECK_THROWS_AS(s.apply(order({{"rudder_deg", 5}, {"heading_deg", 10}})), OrderRejected);
  CHECK(s.snapshot() == before);

  // Pitch lever scales the ordered shaft rate.
  s.apply(order({{"telegraph", "half_ahead"}, {"pitch", 0.5}}));
  CHECK(s.snapshot().shaft_ordered == doctest::Approx(0.35 * engine.rated_rate));

  // Snapshots without a step in between are identical.
  CHECK(s.snapshot() == s.snapshot());
}

TEST_CASE("conning readouts") {
  SUBCASE("depth under keel at rest in the evolution area") {
    const auto sc = make_scenario(ship_json(-100, 1950, 0, 0));
    ShipSession s(sc, "k1");
    const auto snap = s.snapshot();
    CHECK(snap.draft == doctest::Approx(10.79).epsilon(1e-3));
    REQUIRE(snap.depth_under_keel);
    CHECK(*snap.depth == 12.0);
    CHECK(*snap.depth_under_keel == doctest::Approx(12.0 - snap.draft));
    CHECK(*snap.depth_under_keel == doctest::Approx(1.21).epsilon(0.01));
  }
  SUBCASE("ground speed includes the current") {
    const auto sc = make_scenario(ship_json(-100, 1950, 90, 0), {{"current_north_ms", 1.0}});
    ShipSession s(sc, "k1");
    CHECK(s.snapshot().sog == 1.0);
    CHECK(s.snapshot().cog == 0.0);
    const json j = to_json(s.snapshot());
    for (const auto& name : ship_state_attributes()) CHECK(j.contains(name));
    CHECK(j.size() == ship_state_attributes().size());
  }
}

TEST_CASE("anchor holds the drop point against a current") {
  const auto sc = make_scenario(ship_json(-100, 1950, 0, 0), {{"current_east_ms", 0.2}});
  ShipSession anchored(sc, "k1");
  ShipSession drifting(sc, "k1");
  anchored.apply(order({{"anchor", "drop"}}));
  CHECK(anchored.snapshot().anchor.has_value());
  for (int i = 0; i < 6000; ++i) {
    anchored.step();
    drifting.step();
  }
  const double held = std::hypot(anchored.state().x + 100, anchored.state().y - 1950);
  const double drift = std::hypot(drifting.state().x + 100, drifting.state().y - 1950);
  MESSAGE("anchored offset " << held << " m, free drift " << drift << " m");
  CHECK(drift > 50.0);
  CHECK(held < 0.1 * drift);
  anchored.apply(order({{"anchor", "weigh"}}));
  CHECK_FALSE(anchored.snapshot().anchor.has_value());
}

TEST_CASE("heading hold") {
  const auto sc = make_scenario(ship_json(-1800, 1950, 0, 6));
  ShipSession s(sc, "k1");
  s.apply(order({{"heading_deg", 10}}));
  double peak = 0.0;
  for (int i = 0; i < 8000; ++i) {
    s.step();
    peak = std::max(peak, rad2deg(s.state().psi));
  }
  CHECK(peak < 11.0);
  CHECK(rad2deg(s.state().psi) == doctest::Approx(10.0).epsilon(0.01));
  CHECK(std::abs(s.state().r) < 1e-4);
  // A rudder order takes the helm back.
  s.apply(order({{"rudder_deg", 0}}));
  CHECK_FALSE(s.snapshot().heading_hold.has_value());
}

TEST_CASE("waves move the ship and calm seas leave it level") {
  const auto sc = make_scenario(
      ship_json(-1800, 1950, 0, 6),
      {{"wave", {{"amplitude_m", 1.0}, {"period_s", 8.0}, {"towards_deg", 180}}}});
  ShipSession s(sc, "k1");
  double peak = 0.0;
  for (int i = 0; i < 2000; ++i) {
    s.step();
    peak = std::max(peak, std::abs(s.motions().heave));
  }
  CHECK(peak > 0.01);
  CHECK(s.snapshot().wave_forcing);
  s.set_environment(scenario::parse_environment_change({{"wave", nullptr}}, 9.81));
  for (int i = 0; i < 20000; ++i) s.step();
  CHECK(std::abs(s.motions().heave) < 1e-3);

  const auto calm = make_scenario(ship_json(-1800, 1950, 0, 6));
  ShipSession c(calm, "k1");
  for (int i = 0; i < 200; ++i) c.step();
  CHECK(c.motions().heave == 0.0);
  CHECK(c.motions().roll == 0.0);
}

TEST_CASE("order log replays bit for bit") {
  const auto sc = make_scenario(ship_json(-1800, 1950, 0, 6));
  const fs::path log_path = temp_file("session.log");
  std::ostringstream live_csv;
  {
    ShipSession s(sc, "k1");
    OrderLogWriter log(log_path.string(), make_header(sc, s));
    TrajectoryWriter traj(live_csv);
    traj.row(s);
    for (int i = 0; i < 3000; ++i) {
      if (i == 100) {
        s.apply(order({{"rudder_deg", -25}}));
        log.order(s.steps(), order({{"rudder_deg", -25}}));
      }
      if (i == 900) {
        s.apply(order({{"telegraph", "slow_ahead"}, {"heading_deg", 45}}));
        log.order(s.steps(), order({{"telegraph", "slow_ahead"}, {"heading_deg", 45}}));
      }
      if (i == 1500) {
        const json env{{"wind_speed_ms", 12}, {"wind_from_deg", 90}};
        s.set_environment(scenario::parse_environment_change(env, 9.81));
        log.environment(s.steps(), env);
      }
      s.step();
      traj.row(s);
    }
    log.finish(s.steps());
  }

  const OrderLog log = read_order_log(log_path.string());
  CHECK_FALSE(log.truncated);
  CHECK(log.entries.size() == 3);
  std::ostringstream replay_csv;
  const auto r = replay(log, sc, replay_csv);
  CHECK(r.steps == 3000);
  CHECK(replay_csv.str() == live_csv.str());

  SUBCASE("truncated log replays up to the cut") {
    std::string text = slurp(log_path);
    text = text.substr(0, text.rfind("{\"environment\"") + 20);  // last line cut mid-object
    std::istringstream in(text);
    const OrderLog cut = parse_order_log(in, "cut.log");
    CHECK(cut.truncated);
    CHECK(cut.entries.size() == 2);
    std::ostringstream csv;
    const auto rc = replay(cut, sc, csv);
    CHECK(rc.steps == 900);
    CHECK(rc.truncated);
    CHECK(live_csv.str().rfind(csv.str(), 0) == 0);  // a prefix of the live run
  }
  SUBCASE("a different ship config is refused") {
    OrderLog other = log;
    other.header.config_hash = "0000000000000000";
    std::ostringstream csv;
    CHECK_THROWS_AS(replay(other, sc, csv), ReplayMismatch);
    other = log;
    other.header.initial["x"] = 5.0;
    CHECK_THROWS_AS(replay(other, sc, csv), ReplayMismatch);
  }
  SUBCASE("garbage before the last line is an error") {
    std::istringstream in(slurp(log_path) + "not json\n{\"end_step\":5}\n");
    CHECK_THROWS_AS(parse_order_log(in, "bad.log"), ParseError);
  }
}

TEST_CASE("runner: control port, order log and replay") {
  const auto sc = make_scenario(ship_json(-1800, 1950, 0, 6));
  BridgeOptions opt;
  opt.ship_id = "k1";
  opt.time_scale = 0.0;
  opt.duration = 60.0;
  opt.control = net::Endpoint{"127.0.0.1", 0};
  opt.order_log = temp_file("runner.log").string();
  opt.trajectory = temp_file("runner.csv").string();
  opt.start_paused = true;
  BridgeRunner runner(sc, opt);
  runner.start();

  rti::LocalClient client({"127.0.0.1", runner.control_port()});
  auto ack = client.request(rti::MsgType::HELM_ORDER, {{"rudder_deg", 15}, {"telegraph", "half_ahead"}});
  CHECK(ack.type == rti::MsgType::ORDER_ACK);
  CHECK(ack.payload["accepted"] == true);
  CHECK(ack.payload["step"] == 0);
  auto bad = client.request(rti::MsgType::HELM_ORDER, {{"anchor", "drop"}});
  CHECK(bad.payload["accepted"] == false);
  auto junk = client.request(rti::MsgType::HELM_ORDER, {{"rudder", 5}});
  CHECK(junk.payload["accepted"] == false);
  auto snap = client.request(rti::MsgType::SNAPSHOT_REQUEST);
  CHECK(snap.type == rti::MsgType::SNAPSHOT);
  CHECK(snap.payload["ship"] == "k1");
  CHECK(snap.payload["conning"]["step"] == 0);
  CHECK(snap.payload["status"]["paused"] == true);
  CHECK(client.request(rti::MsgType::SESSION_CONTROL, {{"action", "resume"}}).payload["ok"] == true);
  runner.wait();
  const auto last = runner.snapshot();
  CHECK(last->step == 1200);
  CHECK(last->rudder_ordered == doctest::Approx(deg2rad(15)));
  runner.stop();

  std::ostringstream csv;
  const auto r = replay(read_order_log(opt.order_log), sc, csv);
  CHECK(r.steps == 1200);
  CHECK_FALSE(r.truncated);
  CHECK(csv.str() == slurp(opt.trajectory));
}

TEST_CASE("runner: pacing follows the wall clock") {
  const auto sc = make_scenario(ship_json(-1800, 1950, 0, 6));
  BridgeOptions opt;
  opt.ship_id = "k1";
  opt.time_scale = 1.0;
  opt.duration = 2.0;
  opt.control.reset();
  BridgeRunner runner(sc, opt);
  const auto t0 = std::chrono::steady_clock::now();
  runner.start();
  runner.wait();
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(runner.snapshot()->sim_time == doctest::Approx(2.0));
  CHECK(wall == doctest::Approx(2.0).epsilon(0.05));
  CHECK(runner.status().debt_drops == 0);
}

TEST_CASE("runner: federated publication at 10 Hz") {
  rti::ServerOptions so;
  so.endpoint = {"127.0.0.1", 0};
  so.poll_interval = 0.01;
  rti::RtiServer server(so);
  server.start();
  const net::Endpoint ep{"127.0.0.1", server.port()};
  auto tower = rti::RtiClient::join(ep, "tower");
  tower->subscribe(kShipStateClass);
  tower->publish("Dummy", "d", {"x"});
  std::this_thread::sleep_for(std::chrono::milliseconds(50));

  auto sc = make_scenario(ship_json(-1800, 1950, 0, 6));
  sc.ships[0].script.steps.push_back({3.0, order({{"rudder_deg", 10}})});
  auto run = [&](bool federated, const std::string& csv) {
    BridgeOptions opt;
    opt.ship_id = "k1";
    opt.time_scale = 4.0;
    opt.duration = 5.0;
    opt.control.reset();
    opt.trajectory = temp_file(csv).string();
    if (federated) opt.rti = ep;
    BridgeRunner runner(sc, opt);
    CHECK(runner.status().federated == federated);
    runner.start();
    runner.wait();
    runner.stop();
    return slurp(opt.trajectory);
  };

  const std::string fed = run(true, "fed.csv");
  std::vector<rti::FedMessage> updates;
  while (auto m = tower->poll(std::chrono::milliseconds(200))) {
    if (m->type == rti::MsgType::UPDATE) updates.push_back(*m);
  }
  REQUIRE(updates.size() == 51);  // step 0 plus one every 2 steps
  for (std::size_t i = 0; i < updates.size(); ++i) {
    const auto& u = updates[i];
    CHECK(u.federate_id == "bridge-k1");
    CHECK(u.payload["instance"] == "k1");
    CHECK(u.payload["attributes"]["step"] == 2 * i);
    CHECK(u.sim_time == doctest::Approx(0.1 * static_cast<double>(i)));
  }
  // Publication has no side effect on the dynamics.
  CHECK(run(false, "solo.csv") == fed);
  tower->resign();
  server.stop();
}

TEST_CASE("runner: environment interaction from the federation") {
  rti::ServerOptions so;
  so.endpoint = {"127.0.0.1", 0};
  rti::RtiServer server(so);
  server.start();
  const net::Endpoint ep{"127.0.0.1", server.port()};
  const auto sc = make_scenario(ship_json(-1800, 1950, 0, 6));
  BridgeOptions opt;
  opt.ship_id = "k1";
  opt.time_scale = 1.0;
  opt.control.reset();
  opt.rti = ep;
  opt.order_log = temp_file("env.log").string();
  BridgeRunner runner(sc, opt);
  runner.start();
  auto instructor = rti::RtiClient::join(ep, "instructor");
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  instructor->interaction(kEnvironmentClass, 0.0, {{"wind_speed_ms", 15}, {"wind_from_deg", 45}});
  for (int i = 0; i < 100 && runner.snapshot()->environment.wind_speed != 15.0; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  CHECK(runner.snapshot()->environment.wind_speed == 15.0);
  CHECK(runner.snapshot()->environment.wind_direction == doctest::Approx(deg2rad(45)));
  runner.stop();
  const auto log = read_order_log(opt.order_log);
  REQUIRE(log.entries.size() == 1);
  CHECK(log.entries[0].environment.has_value());
  instructor->resign();
  server.stop();
}
