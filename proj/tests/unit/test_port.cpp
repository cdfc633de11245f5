#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "harbour/port/port.hpp"
#include "harbour/scenario/scenario.hpp"

using namespace harbour;
using namespace harbour::port;

namespace {

const std::string kData = HARBOUR_DATA_DIR;

const PortGeometry& salerno() {
  static const PortGeometry g = load_geo(kData + "/ports/salerno.geo");
  return g;
}

// Independent oracle: closed separating-axis test between a rectangle and a
// convex polygon using the edge normals of both shapes.
bool sat_oracle(const Footprint& f, const Polygon& convex) {
  const auto c = corners(f);
  const Polygon rect(c.begin(), c.end());
  auto axes_of = [](const Polygon& p) {
    std::vector<Vec2> out;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const Vec2 e = p[(i + 1) % p.size()] - p[i];
      out.push_back({-e.y, e.x});
    }
    return out;
  };
  auto axes = axes_of(rect);
  for (Vec2 a : axes_of(convex)) axes.push_back(a);
  for (Vec2 a : axes) {
    double lo1 = 1e300, hi1 = -1e300, lo2 = 1e300, hi2 = -1e300;
    for (Vec2 p : rect) {
      lo1 = std::min(lo1, dot(p, a));
      hi1 = std::max(hi1, dot(p, a));
    }
    for (Vec2 p : convex) {
      lo2 = std::min(lo2, dot(p, a));
      hi2 = std::max(hi2, dot(p, a));
    }
    if (hi1 < lo2 || hi2 < lo1) return false;
  }
  return true;
}

PortGeometry parse(const std::string& text) {
  std::istringstream in(text);
  return parse_geo(in, "mem.geo");
}

const char* kMinimal = R"(geo 1
bounds -100 -100 100 100
land Pier
  50 -10
  50 10
  60 10
  60 -10
end
quay A length 20 dock 1 from 50 -10 to 50 10
channel width 20 depth 13 from -90 0 to -10 0
evolution center 0 0 diameter 30 depth 12
)";

int parse_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("quay lengths") {
  CHECK(salerno().quay_length("Ponente") == 563.0);
  CHECK(salerno().quay_length("Trapezio") == 890.0);
  CHECK(salerno().quay_length("Manfredi") == 380.0);
  CHECK(salerno().quay_length("Rosso") == 226.0);
  CHECK(salerno().quay_length("Ligea") == 250.0);
  CHECK(salerno().quay_length("3_Gennaio") == 446.0);
  CHECK_THROWS_AS(salerno().quay_length("Nowhere"), UnknownQuay);
  for (const auto& q : salerno().quays) {
    CHECK(std::abs(length(q.end - q.start) - q.length) < 0.5);
  }
}

TEST_CASE("charted dimensions") {
  const auto& g = salerno();
  CHECK(g.channel.width == 280.0);
  CHECK(g.channel.depth == 13.0);
  CHECK(g.evolution.diameter == 550.0);
  CHECK(g.evolution.depth == 12.0);
  CHECK(g.ambient_depth == 11.0);
  // The outline really is 280 m across.
  const Vec2 a = g.channel.outline[0], d = g.channel.outline[3];
  CHECK(length(a - d) == doctest::Approx(280.0));
}

TEST_CASE("depth lookup") {
  const auto& g = salerno();
  CHECK(g.depth_at({-1000, 1950}) == 13.0);
  CHECK(g.depth_at({0, 1950}) == 12.0);
  CHECK(g.depth_at({-100, 2200}) == 12.0);
  CHECK(g.depth_at({1200, 0}) == 0.0);
  CHECK(g.depth_at({0, 500}) == 11.0);
  CHECK(g.depth_at({-2500, 0}) == 16.0);
  // Channel outranks the evolution circle where they overlap.
  CHECK(g.depth_at({-360, 1950}) == 13.0);
  CHECK_THROWS_AS(g.depth_at({5000, 0}), OutOfBounds);
  CHECK_THROWS_AS(g.depth_at({0, -2000.001}), OutOfBounds);
  // Total over water and piecewise constant: only charted values occur.
  for (double x = -2990; x < 1500; x += 37) {
    for (double y = -1990; y < 3000; y += 41) {
      const double d = g.depth_at({x, y});
      const bool known = d == 0.0 || d == 11.0 || d == 12.0 || d == 13.0 || d == 16.0;
      REQUIRE(known);
    }
  }
}

TEST_CASE("geometry file errors carry line numbers") {
  CHECK_NOTHROW(parse(kMinimal));
  CHECK(parse_error_line("") == 0);
  CHECK(parse_error_line("geo 2\n") == 1);
  std::string bad_quay = kMinimal;
  bad_quay.replace(bad_quay.find("length 20"), 9, "length 25");
  CHECK(parse_error_line(bad_quay) == 9);
  CHECK(parse_error_line("geo 1\nbounds 0 0 1 1\nland X\n 0 0\n 1 1\n 1 0\n 0 1\nend\n") == 3);
  CHECK(parse_error_line("geo 1\nland X\n 0 0\n 1 0\n") == 2);
  CHECK(parse_error_line("geo 1\n\n# c\nharbor\n") == 4);
  CHECK(parse_error_line("geo 1\nbounds 0 0 x 1\n") == 2);
  std::string dup = kMinimal + std::string("quay A length 20 dock 2 from 50 -10 to 50 10\n");
  CHECK(parse_error_line(dup) == 12);
  std::string floating = kMinimal + std::string("quay B length 10 dock 2 from 0 0 to 0 10\n");
  CHECK(parse_error_line(floating) == 12);
  CHECK(parse_error_line("geo 1\nbounds 0 0 1 1\nevolution center 0 0 diameter 1 depth 1\n") == 3);
  CHECK(parse_error_line(std::string(kMinimal) + "berth B at 55 0 heading 0\n") == 12);
}

TEST_CASE("ship-ship collisions") {
  PortGeometry g = parse(kMinimal);
  g.land.clear();
  Footprint a{"a", {0, 0}, 0.3, 230, 32.2};
  Footprint b = a;
  b.id = "b";
  const std::vector<Footprint> same{a, b};
  const auto ev = check_collision(same, g, 4.5);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].kind == EventKind::collision);
  CHECK(ev[0].time == 4.5);
  CHECK(ev[0].ids == std::vector<std::string>{"a", "b"});

  b.center = {1000, 0};
  const std::vector<Footprint> apart{a, b};
  CHECK(check_collision(apart, g, 0).empty());

  // Exact edge touch counts; one ulp of clearance does not.
  Footprint c{"c", {0, 0}, 0, 10, 4};
  Footprint d{"d", {10, 0}, 0, 10, 4};
  CHECK(footprints_overlap(c, d));
  d.center.x = std::nextafter(10.0, 11.0);
  CHECK_FALSE(footprints_overlap(c, d));
}

TEST_CASE("grazing a land vertex is a contact") {
  const Polygon square{{0, 0}, {10, 0}, {10, 10}, {0, 10}};
  // Stern-port corner lands exactly on (10, 10).
  Footprint f{"f", {15, 12}, 0, 10, 4};
  REQUIRE(corners(f)[2] == Vec2{10, 10});
  CHECK(sat_oracle(f, square));
  CHECK(footprint_hits_polygon(f, square));
  const auto p = contact_point(f, square);
  REQUIRE(p);
  CHECK(*p == Vec2{10, 10});

  f.center = {15, std::nextafter(12.0, 13.0)};
  CHECK_FALSE(sat_oracle(f, square));
  CHECK_FALSE(footprint_hits_polygon(f, square));

  PortGeometry g = parse(kMinimal);
  g.land.push_back({"Square", square});
  f.center = {15, 12};
  const std::vector<Footprint> ships{f};
  const auto ev = check_collision(ships, g, 1.0);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].ids == std::vector<std::string>{"f", "land:Square"});
}

TEST_CASE("polygon predicate agrees with the separating-axis oracle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(-40, 40), ang(-3.2, 3.2), size(1, 30);
  const Polygon hexagon{{0, -10}, {9, -5}, {9, 5}, {0, 10}, {-9, 5}, {-9, -5}};
  for (int i = 0; i < 20000; ++i) {
    const Footprint f{"f", {pos(rng), pos(rng)}, ang(rng), size(rng), size(rng)};
    REQUIRE(footprint_hits_polygon(f, hexagon) == sat_oracle(f, hexagon));
    const Footprint o{"o", {pos(rng), pos(rng)}, ang(rng), size(rng), size(rng)};
    const auto oc = corners(o);
    REQUIRE(footprints_overlap(f, o) == sat_oracle(f, Polygon(oc.begin(), oc.end())));
  }
}

TEST_CASE("collision predicate properties") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> x(-2900, 1400), y(-1900, 2900), ang(-3.2, 3.2);
  std::vector<Footprint> ships;
  for (int i = 0; i < 60; ++i) {
    ships.push_back({"s" + std::to_string(100 + i), {x(rng), y(rng)}, ang(rng), 230, 32.2});
  }
  const auto& g = salerno();
  const auto serial = check_collision_serial(ships, g, 2.0);
  const auto parallel = check_collision(ships, g, 2.0);
  CHECK(serial == parallel);
  CHECK(!serial.empty());

  // Pair order does not matter.
  std::vector<Footprint> reversed(ships.rbegin(), ships.rend());
  CHECK(check_collision(reversed, g, 2.0) == serial);

  // Frame invariance.
  const Vec2 off{1024.0, -2048.0};
  const PortGeometry moved = g.translated(off);
  std::vector<Footprint> shifted = ships;
  for (auto& f : shifted) f.center = f.center + off;
  const auto after = check_collision(shifted, moved, 2.0);
  REQUIRE(after.size() == serial.size());
  for (std::size_t i = 0; i < after.size(); ++i) {
    CHECK(after[i].ids == serial[i].ids);
    CHECK(std::abs(after[i].point.x - off.x - serial[i].point.x) < 1e-6);
  }
  for (const auto& f : ships) {
    const auto a = check_grounding(f, 11.5, g, 0.0);
    Footprint m = f;
    m.center = m.center + off;
    const auto b = check_grounding(m, 11.5, moved, 0.0);
    CHECK(a.has_value() == b.has_value());
  }
}

TEST_CASE("grounding") {
  const auto& g = salerno();
  // Default Kriso draft in the evolution area.
  const Footprint turning{"k", {-100, 1950}, 0.7, 230, 32.2};
  CHECK_FALSE(check_grounding(turning, 10.79, g, 0.0));

  // A 13.5 m draft ship heading north up the roads: the event fires exactly
  // when the bow corners reach the channel's southern edge at x = -2000.
  Footprint deep{"d", {-2115, 1950}, 0.0, 230, 32.2};
  REQUIRE(corners(deep)[0].x == -2000.0);
  const auto hit = check_grounding(deep, 13.5, g, 12.0);
  REQUIRE(hit);
  CHECK(hit->value == 13.0);
  CHECK(hit->time == 12.0);
  CHECK(hit->point.x == -2000.0);
  deep.center.x = std::nextafter(-2115.0, -3000.0);
  CHECK_FALSE(check_grounding(deep, 13.5, g, 0.0));

  for (double px = -2800; px < 900; px += 150) {
    const Footprint f{"s", {px, 1950}, 0.0, 230, 32.2};
    bool on_land = false;
    for (const auto& l : g.land) on_land = on_land || footprint_hits_polygon(f, l.outline);
    if (!on_land) CHECK_FALSE(check_grounding(f, 5.0, g, 0.0));
  }
}

TEST_CASE("channel occupancy and edge triggering") {
  const auto& g = salerno();
  const Footprint inside{"a", {-1500, 1950}, 0.0, 230, 32.2};
  const Footprint second{"b", {-1000, 1950}, 0.0, 230, 32.2};
  // Waiting just short of the southern entrance.
  const Footprint waiting{"c", {-2116, 1950}, 0.0, 230, 32.2};
  {
    const std::vector<Footprint> one{inside, waiting};
    CHECK(channel_occupancy(one, g) == std::set<std::string>{"a"});
  }
  const std::vector<Footprint> two{inside, second};
  CHECK(channel_occupancy(two, g).size() == 2);

  EdgeTrigger t;
  int fired = 0;
  for (int i = 0; i < 50; ++i) fired += t.update(channel_occupancy(two, g).size() > 1);
  CHECK(fired == 1);
  const std::vector<Footprint> one{inside};
  for (int i = 0; i < 5; ++i) fired += t.update(channel_occupancy(one, g).size() > 1);
  for (int i = 0; i < 5; ++i) fired += t.update(channel_occupancy(two, g).size() > 1);
  CHECK(fired == 2);
}

TEST_CASE("event kind names") {
  for (auto k : {EventKind::collision, EventKind::grounding, EventKind::channel_violation,
                 EventKind::speed_violation, EventKind::mission_complete}) {
    CHECK(parse_event_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_event_kind("mission"), ConfigError);
}

using namespace harbour::scenario;

namespace {

std::string two_ship_json(const std::string& ship_a, const std::string& ship_b) {
  return R"({"version": 1, "name": "t", "port": "ports/salerno.geo", "ships": [)" + ship_a +
         "," + ship_b + "]}";
}

std::string ship(const std::string& id, double x, double y, const std::string& extra = "") {
  return R"({"id": ")" + id + R"(", "config": "ships/kriso.cfg", "initial": {"x_m": )" +
         std::to_string(x) + R"(, "y_m": )" + std::to_string(y) + "}" + extra + "}";
}

}  // namespace

TEST_CASE("scenario loading") {
  const auto sc = load_scenario(kData + "/scenarios/salerno_inbound.json");
  CHECK(sc.name == "salerno-inbound");
  REQUIRE(sc.ships.size() == 2);
  CHECK(sc.ships[0].role == Role::piloted);
  CHECK(sc.ships[0].mission->berth == "Trapezio_1");
  CHECK(sc.ships[0].initial.u == doctest::Approx(6 * kKnot));
  CHECK(sc.ships[1].role == Role::scripted);
  REQUIRE(sc.wave);
  CHECK(sc.wave->amplitude == 0.5);
  CHECK(sc.rules.speed_limit == doctest::Approx(8 * kKnot));
  CHECK_THROWS_AS(sc.ship("ghost"), ScenarioError);

  CHECK_NOTHROW(parse_scenario(two_ship_json(ship("a", -1800, 1950), ship("b", -1800, 1300)),
                               "mem", kData));
  CHECK_THROWS_AS(parse_scenario(two_ship_json(ship("a", -1800, 1950), ship("a", -1800, 1300)),
                                 "mem", kData),
                  ScenarioError);
  // On land, outside the chart, in too shallow water.
  CHECK_THROWS_AS(parse_scenario(two_ship_json(ship("a", 1200, 0), ship("b", -1800, 1300)),
                                 "mem", kData),
                  ScenarioError);
  CHECK_THROWS_AS(parse_scenario(two_ship_json(ship("a", -2990, 0), ship("b", -1800, 1300)),
                                 "mem", kData),
                  ScenarioError);
  CHECK_THROWS_AS(
      parse_scenario(two_ship_json(ship("a", -1800, 1950, R"(, "mission": {"berth": "X"})"),
                                   ship("b", -1800, 1300)),
                     "mem", kData),
      ScenarioError);
  CHECK_THROWS_AS(
      parse_scenario(two_ship_json(ship("a", -1800, 1950, R"(, "colour": "red")"),
                                   ship("b", -1800, 1300)),
                     "mem", kData),
      ScenarioError);
  CHECK_THROWS_AS(
      parse_scenario(two_ship_json(ship("a", -1800, 1950, R"(, "script": [{"t": 5}, {"t": 1}])"),
                                   ship("b", -1800, 1300)),
                     "mem", kData),
      ScenarioError);
  CHECK_THROWS_AS(parse_scenario("{not json", "mem", kData), ScenarioError);
}

TEST_CASE("a deep-draft ship cannot start in 11 m water") {
  // The scenario loader applies the same grounding predicate at t = 0.
  const auto sc = load_scenario(kData + "/scenarios/salerno_inbound.json");
  auto fp = footprint_of("x", sc.ships[0].initial, sc.ships[0].config.particulars);
  CHECK_FALSE(check_grounding(fp, sc.ships[0].config.particulars.draft, sc.port, 0.0));
  fp.center = {0, 500};
  CHECK(check_grounding(fp, 11.5, sc.port, 0.0));
}

TEST_CASE("telegraph and orders") {
  TelegraphTable t;
  dynamics::EngineModel e;
  e.rated_rate = 2.0;
  CHECK(t.shaft_rate(Telegraph::full_ahead, e) == 2.0);
  CHECK(t.shaft_rate(Telegraph::half_ahead, e) == doctest::Approx(1.4));
  CHECK(t.shaft_rate(Telegraph::slow_ahead, e) == doctest::Approx(0.8));
  CHECK(t.shaft_rate(Telegraph::dead_slow_ahead, e) == doctest::Approx(0.4));
  CHECK(t.shaft_rate(Telegraph::full_astern, e) == doctest::Approx(-1.4));
  CHECK(t.shaft_rate(Telegraph::stop, e) == 0.0);
  CHECK(parse_telegraph("Half Ahead") == Telegraph::half_ahead);
  CHECK(parse_telegraph("dead-slow-astern") == Telegraph::dead_slow_astern);
  CHECK_THROWS_AS(parse_telegraph("flank"), ConfigError);

  const auto o = parse_order(nlohmann::json::parse(
      R"({"rudder_deg": -20, "telegraph": "half_ahead", "thrusters": [0.5], "anchor": "drop"})"));
  CHECK(*o.rudder == doctest::Approx(-deg2rad(20)));
  CHECK(*o.telegraph == Telegraph::half_ahead);
  CHECK((*o.thrusters)[0] == 0.5);
  CHECK(*o.anchor == AnchorAction::drop);
  // Logged orders parse back to identical bits.
  CHECK(parse_order(order_json(o)) == o);
  HelmOrder h;
  h.rudder = 0.1 + 0.2;
  h.heading_hold = -1.0 / 3.0;
  h.shaft = 1.0 / 7.0;
  CHECK(parse_order(order_json(h)) == h);
  CHECK_THROWS_AS(parse_order(nlohmann::json::parse(R"({"rudder": 1})")), ConfigError);
  CHECK_THROWS_AS(parse_order(nlohmann::json::parse(R"({"pitch": 2})")), ConfigError);
  CHECK_THROWS_AS(parse_order(nlohmann::json::parse(R"({"shaft_rps": 1, "telegraph": "stop"})")),
                  ConfigError);
}
