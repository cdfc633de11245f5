#pragma once

// Wire format shared by the federation and the local control ports: a
// 4-byte big-endian body length followed by a UTF-8 JSON object
//
//   {"federate": "<id>", "payload": {...}, "seq": <n>, "time": <s>, "type": "<TYPE>"}
//
// Keys are emitted in that (sorted) order without whitespace, doubles with
// round-trip precision, so encoding is a pure function of the message.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "harbour/common/error.hpp"
#include "json.hpp"

namespace harbour::rti {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::uint16_t kDefaultPort = 4516;
/// Sender id on messages generated by the RTI itself.
inline constexpr const char* kRtiId = "rti";
/// Object class of ship states and interaction class of instructor
/// environment changes.
inline constexpr const char* kShipStateClass = "ShipState";
inline constexpr const char* kEnvironmentClass = "EnvironmentControl";
inline constexpr std::size_t kMaxFrameBytes = 16u << 20;

class MalformedFrame : public Error {
 public:
  using Error::Error;
};

enum class MsgType {
  // Federation.
  JOIN,
  JOIN_ACK,
  RESIGN,
  PUBLISH,
  SUBSCRIBE,
  UPDATE,
  INTERACTION,
  HEARTBEAT,
  ERROR,
  // Bridge control port.
  HELM_ORDER,
  ORDER_ACK,
  SNAPSHOT_REQUEST,
  SNAPSHOT,
  SESSION_CONTROL,
  SESSION_ACK,
  // Tower query port.
  PICTURE_REQUEST,
  PICTURE,
  EVENTS_REQUEST,
  EVENTS,
  METRICS_REQUEST,
  METRICS,
  TELEPORT_REQUEST,
  TELEPORT,
  INSTRUCTOR_SET_ENVIRONMENT,
};

const char* to_string(MsgType t);
/// Throws MalformedFrame.
MsgType parse_msg_type(std::string_view name);

struct FedMessage {
  MsgType type = MsgType::HEARTBEAT;
  std::string federate_id;
  double sim_time = 0.0;
  std::uint64_t seq = 0;
  nlohmann::json payload = nlohmann::json::object();

  bool operator==(const FedMessage&) const = default;
};

/// JSON body without the length prefix.
std::string encode_body(const FedMessage& m);
/// Length prefix + body.
std::string encode(const FedMessage& m);
/// Parses a body. Throws MalformedFrame on invalid UTF-8, bad JSON, unknown
/// types, missing or mistyped fields, negative or non-finite sim_time.
FedMessage decode_body(std::string_view body);
/// Exactly one whole frame. Throws MalformedFrame.
FedMessage decode(std::string_view frame);

bool valid_utf8(std::string_view s);

/// Incremental decoder for a byte stream.
class FrameDecoder {
 public:
  void feed(std::string_view bytes) { buffer_.append(bytes); }
  /// Next complete message, or nullopt when more bytes are needed. Throws
  /// MalformedFrame on a zero or oversized length prefix or a bad body.
  std::optional<FedMessage> next();
  std::size_t buffered() const { return buffer_.size(); }

 private:
  std::string buffer_;
};

/// Convenience constructor.
FedMessage make_message(MsgType type, std::string federate_id, double sim_time, std::uint64_t seq,
                        nlohmann::json payload = nlohmann::json::object());

}  // namespace harbour::rti
