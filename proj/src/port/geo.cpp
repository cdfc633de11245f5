#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "harbour/common/units.hpp"
#include "harbour/port/port.hpp"

namespace harbour::port {

namespace {

constexpr double kQuayLengthTolerance = 0.5;  // m, declared vs drawn
constexpr double kQuayOnLandTolerance = 1.0;  // m

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line.substr(0, line.find('#')));
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

class Parser {
 public:
  Parser(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  PortGeometry run() {
    PortGeometry g;
    bool have_header = false, have_bounds = false, have_channel = false, have_evolution = false;
    bool have_harbour = false;
    std::map<std::string, int> names;
    auto unique = [&](const std::string& kind, const std::string& name) {
      if (!names.emplace(kind + ":" + name, line_).second) fail("duplicate " + kind + " '" + name + "'");
    };

    while (next()) {
      const auto& t = toks_;
      const std::string& kw = t[0];
      if (!have_header) {
        if (kw != "geo" || t.size() != 2) fail("expected 'geo 1' header");
        if (t[1] != "1") fail("unsupported geo version " + t[1]);
        have_header = true;
        continue;
      }
      if (kw == "name") {
        if (t.size() < 2) fail("name needs a value");
        std::string n;
        for (std::size_t i = 1; i < t.size(); ++i) n += (i > 1 ? " " : "") + t[i];
        g.name = n;
      } else if (kw == "bounds") {
        expect(5);
        g.bounds = {num(1), num(2), num(3), num(4)};
        if (!(g.bounds.min_x < g.bounds.max_x && g.bounds.min_y < g.bounds.max_y)) {
          fail("bounds must have min < max");
        }
        have_bounds = true;
      } else if (kw == "ambient_depth") {
        expect(2);
        g.ambient_depth = positive(1, "ambient depth");
      } else if (kw == "land") {
        expect(2);
        unique("land", t[1]);
        const int at = line_;
        LandArea a{t[1], polygon()};
        check_polygon(a.outline, at, "land '" + a.name + "'");
        g.land.push_back(std::move(a));
      } else if (kw == "zone") {
        expect(4);
        keyword(2, "depth");
        unique("zone", t[1]);
        const int at = line_;
        DepthZone z{t[1], {}, positive(3, "zone depth")};
        z.outline = polygon();
        check_polygon(z.outline, at, "zone '" + z.name + "'");
        g.zones.push_back(std::move(z));
      } else if (kw == "harbour") {
        expect(1);
        if (have_harbour) fail("duplicate harbour outline");
        const int at = line_;
        g.harbour = polygon();
        check_polygon(g.harbour, at, "harbour outline");
        have_harbour = true;
      } else if (kw == "quay") {
        // quay NAME length L dock N from X Y to X Y
        expect(12);
        keyword(2, "length");
        keyword(4, "dock");
        keyword(6, "from");
        keyword(9, "to");
        unique("quay", t[1]);
        Quay q{t[1], {num(7), num(8)}, {num(10), num(11)}, positive(3, "quay length"),
               static_cast<int>(num(5))};
        if (num(5) != std::floor(num(5)) || q.docking_number < 0) {
          fail("docking number must be a non-negative integer");
        }
        if (std::abs(length(q.end - q.start) - q.length) > kQuayLengthTolerance) {
          std::ostringstream m;
          m << "quay '" << q.name << "' is drawn " << length(q.end - q.start)
            << " m long but declared " << q.length << " m";
          fail(m.str());
        }
        g.quays.push_back(q);
        quay_lines_.push_back(line_);
      } else if (kw == "channel") {
        // channel width W depth D from X Y to X Y
        expect(11);
        keyword(1, "width");
        keyword(3, "depth");
        keyword(5, "from");
        keyword(8, "to");
        if (have_channel) fail("duplicate channel");
        Channel& c = g.channel;
        c.width = positive(2, "channel width");
        c.depth = positive(4, "channel depth");
        c.start = {num(6), num(7)};
        c.end = {num(9), num(10)};
        const Vec2 axis = c.end - c.start;
        const double len = length(axis);
        if (len <= 0.0) fail("channel centreline has zero length");
        const Vec2 side = (0.5 * c.width / len) * Vec2{-axis.y, axis.x};
        c.outline = {c.start + side, c.end + side, c.end - side, c.start - side};
        have_channel = true;
      } else if (kw == "evolution") {
        // evolution center X Y diameter D depth H
        expect(8);
        keyword(1, "center");
        keyword(4, "diameter");
        keyword(6, "depth");
        if (have_evolution) fail("duplicate evolution area");
        g.evolution = {{num(2), num(3)}, positive(5, "evolution diameter"),
                       positive(7, "evolution depth")};
        have_evolution = true;
      } else if (kw == "berth") {
        // berth NAME at X Y heading DEG
        expect(7);
        keyword(2, "at");
        keyword(5, "heading");
        unique("berth", t[1]);
        g.berths.push_back({t[1], {num(3), num(4)}, wrap_pi(deg2rad(num(6)))});
        berth_lines_.push_back(line_);
      } else {
        fail("unknown keyword '" + kw + "'");
      }
    }
    if (!have_header) fail("empty geometry file");
    if (!have_bounds) fail("missing bounds");
    if (!have_channel) fail("missing channel");
    if (!have_evolution) fail("missing evolution area");

    for (std::size_t i = 0; i < g.quays.size(); ++i) {
      const Quay& q = g.quays[i];
      for (Vec2 p : {q.start, q.end}) {
        const bool on_land = std::any_of(g.land.begin(), g.land.end(), [&](const LandArea& a) {
          return on_boundary(a.outline, p, kQuayOnLandTolerance);
        });
        if (!on_land) fail_at(quay_lines_[i], "quay '" + q.name + "' does not lie on a land edge");
      }
    }
    for (std::size_t i = 0; i < g.berths.size(); ++i) {
      const Vec2 p = g.berths[i].position;
      if (!g.bounds.contains(p) || g.on_land(p)) {
        fail_at(berth_lines_[i], "berth '" + g.berths[i].name + "' is not on water inside the bounds");
      }
    }
    return g;
  }

 private:
  bool next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      toks_ = tokenize(line);
      if (!toks_.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_, what); }
  [[noreturn]] void fail_at(int line, const std::string& what) const {
    throw ParseError(source_, line, what);
  }

  void expect(std::size_t n) const {
    if (toks_.size() != n) {
      fail("'" + toks_[0] + "' expects " + std::to_string(n - 1) + " fields, got " +
           std::to_string(toks_.size() - 1));
    }
  }

  void keyword(std::size_t i, const char* kw) const {
    if (toks_[i] != kw) fail("expected '" + std::string(kw) + "', got '" + toks_[i] + "'");
  }

  double num(std::size_t i) const { return parse_number(toks_[i]); }

  double parse_number(const std::string& s) const {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) fail("not a number: '" + s + "'");
    return v;
  }

  double positive(std::size_t i, const char* what) const {
    const double v = num(i);
    if (!(v > 0.0)) fail(std::string(what) + " must be positive");
    return v;
  }

  Polygon polygon() {
    Polygon p;
    const int start = line_;
    while (next()) {
      if (toks_[0] == "end") {
        expect(1);
        return p;
      }
      if (toks_.size() != 2) fail("vertex lines hold two numbers");
      p.push_back({num(0), num(1)});
    }
    fail_at(start, "polygon is missing its 'end' line");
  }

  void check_polygon(const Polygon& p, int at, const std::string& what) const {
    if (p.size() < 3) fail_at(at, what + " needs at least 3 vertices");
    if (!is_simple(p)) fail_at(at, what + " is self-intersecting");
  }

  std::istream& in_;
  std::string source_;
  int line_ = 0;
  std::vector<std::string> toks_;
  std::vector<int> quay_lines_, berth_lines_;
};

}  // namespace

PortGeometry parse_geo(std::istream& in, const std::string& source) {
  return Parser(in, source).run();
}

PortGeometry load_geo(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open geometry file " + path);
  return parse_geo(in, path);
}

bool PortGeometry::on_land(Vec2 p) const {
  return std::any_of(land.begin(), land.end(),
                     [&](const LandArea& a) { return contains(a.outline, p); });
}

bool PortGeometry::in_channel(Vec2 p) const { return contains(channel.outline, p); }

bool PortGeometry::in_evolution_area(Vec2 p) const {
  const Vec2 d = p - evolution.center;
  const double r = 0.5 * evolution.diameter;
  return dot(d, d) <= r * r;
}

bool PortGeometry::in_harbour(Vec2 p) const { return harbour.empty() || contains(harbour, p); }

double PortGeometry::depth_at(Vec2 p) const {
  if (!bounds.contains(p)) {
    std::ostringstream m;
    m << "point (" << p.x << ", " << p.y << ") is outside the chart";
    throw OutOfBounds(m.str());
  }
  if (on_land(p)) return 0.0;
  if (in_channel(p)) return channel.depth;
  if (in_evolution_area(p)) return evolution.depth;
  for (const auto& z : zones) {
    if (contains(z.outline, p)) return z.depth;
  }
  return ambient_depth;
}

const Quay& PortGeometry::quay(const std::string& n) const {
  for (const auto& q : quays) {
    if (q.name == n) return q;
  }
  throw UnknownQuay("unknown quay '" + n + "'");
}

double PortGeometry::quay_length(const std::string& n) const { return quay(n).length; }

const Berth& PortGeometry::berth(const std::string& n) const {
  for (const auto& b : berths) {
    if (b.name == n) return b;
  }
  throw ConfigError("unknown berth '" + n + "'");
}

PortGeometry PortGeometry::translated(Vec2 o) const {
  PortGeometry g = *this;
  auto move = [&](Polygon& p) {
    for (auto& v : p) v = v + o;
  };
  g.bounds = {bounds.min_x + o.x, bounds.min_y + o.y, bounds.max_x + o.x, bounds.max_y + o.y};
  for (auto& a : g.land) move(a.outline);
  for (auto& z : g.zones) move(z.outline);
  move(g.harbour);
  move(g.channel.outline);
  g.channel.start = g.channel.start + o;
  g.channel.end = g.channel.end + o;
  g.evolution.center = g.evolution.center + o;
  for (auto& q : g.quays) {
    q.start = q.start + o;
    q.end = q.end + o;
  }
  for (auto& b : g.berths) b.position = b.position + o;
  return g;
}

}  // namespace harbour::port
