#include "harbour/bridge/order_log.hpp"

#include <cstdio>
#include <istream>

#include "harbour/common/hash.hpp"

namespace harbour::bridge {

using nlohmann::json;

namespace {

json initial_json(const ShipSession& s) {
  const auto& st = s.state();
  return {{"x", st.x}, {"y", st.y}, {"psi", st.psi}, {"u", st.u},
          {"v", st.v}, {"r", st.r}, {"n", st.n}};
}

}  // namespace

LogHeader make_header(const scenario::Scenario& sc, const ShipSession& session) {
  LogHeader h;
  h.scenario = sc.source;
  h.ship = session.ship().id;
  h.dt = session.dt();
  h.config_hash = to_hex(hash_file(session.ship().config_path));
  h.initial = initial_json(session);
  return h;
}

OrderLogWriter::OrderLogWriter(const std::string& path, const LogHeader& h)
    : out_(path, std::ios::trunc), path_(path) {
  if (!out_) throw IoError("cannot write order log '" + path + "'");
  line({{"harbour_order_log", 1}, {"scenario", h.scenario}, {"ship", h.ship}, {"dt", h.dt},
        {"config_hash", h.config_hash}, {"initial", h.initial}});
}

void OrderLogWriter::line(const json& j) {
  out_ << j.dump() << '\n';
  out_.flush();
  if (!out_) throw IoError("write to '" + path_ + "' failed");
}

void OrderLogWriter::order(std::uint64_t step, const scenario::HelmOrder& o) {
  line({{"step", step}, {"order", scenario::order_json(o)}});
}

void OrderLogWriter::environment(std::uint64_t step, const json& change) {
  line({{"step", step}, {"environment", change}});
}

void OrderLogWriter::finish(std::uint64_t end_step) { line({{"end_step", end_step}}); }

OrderLog parse_order_log(std::istream& in, const std::string& source) {
  OrderLog log;
  std::string text;
  int lineno = 0;
  bool have_header = false;
  std::optional<int> bad_line;
  std::string bad_what;
  while (std::getline(in, text)) {
    ++lineno;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (bad_line) throw ParseError(source, *bad_line, bad_what);
    json j;
    try {
      j = json::parse(text);
      if (!j.is_object()) throw ConfigError("expected a JSON object");
      if (!have_header) {
        if (j.value("harbour_order_log", 0) != 1) throw ConfigError("not an order log (version 1)");
        log.header.scenario = j.at("scenario").get<std::string>();
        log.header.ship = j.at("ship").get<std::string>();
        log.header.dt = j.at("dt").get<double>();
        log.header.config_hash = j.at("config_hash").get<std::string>();
        log.header.initial = j.at("initial");
        have_header = true;
        continue;
      }
      if (log.end_step) throw ConfigError("content after the end marker");
      if (j.contains("end_step")) {
        log.end_step = j.at("end_step").get<std::uint64_t>();
        continue;
      }
      LogEntry e;
      e.step = j.at("step").get<std::uint64_t>();
      if (!log.entries.empty() && e.step < log.entries.back().step) {
        throw ConfigError("steps go backwards");
      }
      if (j.contains("order")) {
        e.order = scenario::parse_order(j.at("order"));
      } else if (j.contains("environment")) {
        e.environment = j.at("environment");
      } else {
        throw ConfigError("entry has neither order nor environment");
      }
      log.entries.push_back(std::move(e));
    } catch (const std::exception& ex) {
      if (!have_header) throw ParseError(source, lineno, ex.what());
      // Tolerated only as the final line: a session killed mid-write.
      bad_line = lineno;
      bad_what = ex.what();
    }
  }
  if (!have_header) throw ParseError(source, 0, "empty order log");
  if (bad_line || !log.end_step) log.truncated = true;
  return log;
}

OrderLog read_order_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open order log '" + path + "'");
  return parse_order_log(in, path);
}

TrajectoryWriter::TrajectoryWriter(std::ostream& out, int stride)
    : out_(out), stride_(stride < 1 ? 1 : stride) {
  out_ << "# harbour trajectory v1\n"
          "step,t,x,y,psi,u,v,r,delta,n,heave,pitch,roll,sog,cog\n";
}

void TrajectoryWriter::row(const ShipSession& s) {
  if (s.steps() % static_cast<std::uint64_t>(stride_) != 0) return;
  const auto snap = s.snapshot();
  const auto& st = snap.state;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                "%.17g,%.17g\n",
                static_cast<unsigned long long>(snap.step), snap.sim_time, st.x, st.y, st.psi,
                st.u, st.v, st.r, st.delta, st.n, snap.motions.heave, snap.motions.pitch,
                snap.motions.roll, snap.sog, snap.cog);
  out_ << buf;
}

ReplayResult replay(const OrderLog& log, const scenario::Scenario& sc, std::ostream& csv,
                    int stride) {
  const auto& h = log.header;
  const scenario::ShipEntry* entry = nullptr;
  for (const auto& s : sc.ships) {
    if (s.id == h.ship) entry = &s;
  }
  if (!entry) throw ReplayMismatch("scenario '" + sc.name + "' has no ship '" + h.ship + "'");
  const std::string hash = to_hex(hash_file(entry->config_path));
  if (hash != h.config_hash) {
    throw ReplayMismatch("ship config hash " + hash + " differs from the logged " + h.config_hash);
  }
  ShipSession session(sc, h.ship, h.dt);
  if (initial_json(session) != h.initial) {
    throw ReplayMismatch("initial state of '" + h.ship + "' differs from the logged one");
  }

  std::uint64_t last = 0;
  if (log.end_step) {
    last = *log.end_step;
  } else if (!log.entries.empty()) {
    last = log.entries.back().step;
  }

  TrajectoryWriter traj(csv, stride);
  traj.row(session);
  std::size_t next = 0;
  for (;;) {
    while (next < log.entries.size() && log.entries[next].step == session.steps()) {
      const auto& e = log.entries[next++];
      try {
        if (e.order) session.apply(*e.order);
        if (e.environment) {
          session.set_environment(scenario::parse_environment_change(
              *e.environment, sc.environment.gravity));
        }
      } catch (const Error& ex) {
        throw ReplayMismatch("logged entry at step " + std::to_string(e.step) +
                             " no longer applies: " + ex.what());
      }
    }
    if (session.steps() >= last) break;
    session.step();
    traj.row(session);
  }
  return {session.steps(), log.truncated};
}

}  // namespace harbour::bridge
