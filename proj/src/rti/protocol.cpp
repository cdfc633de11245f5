#include "harbour/rti/protocol.hpp"

#include <array>
#include <cmath>

namespace harbour::rti {

using nlohmann::json;

namespace {

constexpr std::array kNames = {
    "JOIN",          "JOIN_ACK",        "RESIGN",           "PUBLISH",
    "SUBSCRIBE",     "UPDATE",          "INTERACTION",      "HEARTBEAT",
    "ERROR",         "HELM_ORDER",      "ORDER_ACK",        "SNAPSHOT_REQUEST",
    "SNAPSHOT",      "SESSION_CONTROL", "SESSION_ACK",      "PICTURE_REQUEST",
    "PICTURE",       "EVENTS_REQUEST",  "EVENTS",           "METRICS_REQUEST",
    "METRICS",       "TELEPORT_REQUEST", "TELEPORT",        "INSTRUCTOR_SET_ENVIRONMENT",
};
static_assert(kNames.size() == static_cast<std::size_t>(MsgType::INSTRUCTOR_SET_ENVIRONMENT) + 1);

std::uint32_t read_be32(const char* p) {
  const auto* u = reinterpret_cast<const unsigned char*>(p);
  return (std::uint32_t{u[0]} << 24) | (std::uint32_t{u[1]} << 16) | (std::uint32_t{u[2]} << 8) |
         std::uint32_t{u[3]};
}

}  // namespace

const char* to_string(MsgType t) { return kNames[static_cast<std::size_t>(t)]; }

MsgType parse_msg_type(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (name == kNames[i]) return static_cast<MsgType>(i);
  }
  throw MalformedFrame("unknown msg_type '" + std::string(name) + "'");
}

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates and out-of-range code points.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += len;
  }
  return true;
}

std::string encode_body(const FedMessage& m) {
  json j = json::object();
  j["type"] = to_string(m.type);
  j["federate"] = m.federate_id;
  j["time"] = m.sim_time;
  j["seq"] = m.seq;
  j["payload"] = m.payload;
  return j.dump();
}

std::string encode(const FedMessage& m) {
  const std::string body = encode_body(m);
  if (body.size() > kMaxFrameBytes) throw MalformedFrame("message exceeds the frame limit");
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string out;
  out.reserve(4 + body.size());
  out.push_back(static_cast<char>((n >> 24) & 0xFF));
  out.push_back(static_cast<char>((n >> 16) & 0xFF));
  out.push_back(static_cast<char>((n >> 8) & 0xFF));
  out.push_back(static_cast<char>(n & 0xFF));
  out += body;
  return out;
}

FedMessage decode_body(std::string_view body) {
  if (!valid_utf8(body)) throw MalformedFrame("body is not valid UTF-8");
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw MalformedFrame(std::string("body is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw MalformedFrame("body is not a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (k != "type" && k != "federate" && k != "time" && k != "seq" && k != "payload") {
      throw MalformedFrame("unknown field '" + k + "'");
    }
  }
  auto need = [&](const char* key) -> const json& {
    if (!j.contains(key)) throw MalformedFrame(std::string("missing field '") + key + "'");
    return j.at(key);
  };
  FedMessage m;
  if (!need("type").is_string()) throw MalformedFrame("type must be a string");
  m.type = parse_msg_type(j.at("type").get<std::string>());
  if (!need("federate").is_string()) throw MalformedFrame("federate must be a string");
  m.federate_id = j.at("federate").get<std::string>();
  if (!need("time").is_number()) throw MalformedFrame("time must be a number");
  m.sim_time = j.at("time").get<double>();
  if (!std::isfinite(m.sim_time) || m.sim_time < 0.0) throw MalformedFrame("time must be >= 0");
  if (!need("seq").is_number_unsigned()) throw MalformedFrame("seq must be a non-negative integer");
  m.seq = j.at("seq").get<std::uint64_t>();
  if (!need("payload").is_object()) throw MalformedFrame("payload must be an object");
  m.payload = j.at("payload");
  return m;
}

FedMessage decode(std::string_view frame) {
  if (frame.size() < 4) throw MalformedFrame("frame shorter than its length prefix");
  const std::uint32_t n = read_be32(frame.data());
  if (n == 0) throw MalformedFrame("zero-length frame");
  if (n > kMaxFrameBytes) throw MalformedFrame("frame length exceeds the limit");
  if (frame.size() != 4 + std::size_t{n}) throw MalformedFrame("frame length does not match its prefix");
  return decode_body(frame.substr(4));
}

std::optional<FedMessage> FrameDecoder::next() {
  if (buffer_.size() < 4) return std::nullopt;
  const std::uint32_t n = read_be32(buffer_.data());
  if (n == 0) throw MalformedFrame("zero-length frame");
  if (n > kMaxFrameBytes) throw MalformedFrame("frame length exceeds the limit");
  if (buffer_.size() < 4 + std::size_t{n}) return std::nullopt;
  FedMessage m = decode_body(std::string_view(buffer_).substr(4, n));
  buffer_.erase(0, 4 + std::size_t{n});
  return m;
}

FedMessage make_message(MsgType type, std::string federate_id, double sim_time, std::uint64_t seq,
                        json payload) {
  return {type, std::move(federate_id), sim_time, seq, std::move(payload)};
}

}  // namespace harbour::rti
