#include "harbour/rti/router.hpp"

#include <algorithm>

namespace harbour::rti {

using nlohmann::json;

namespace {

bool string_field(const json& p, const char* key) {
  return p.contains(key) && p.at(key).is_string() && !p.at(key).get<std::string>().empty();
}

std::set<std::string> attribute_keys(const FedMessage& m) {
  std::set<std::string> keys;
  if (m.payload.contains("attributes") && m.payload.at("attributes").is_object()) {
    for (const auto& [k, v] : m.payload.at("attributes").items()) keys.insert(k);
  }
  return keys;
}

std::string instance_of(const FedMessage& m) {
  return m.payload.contains("instance") && m.payload.at("instance").is_string()
             ? m.payload.at("instance").get<std::string>()
             : std::string();
}

}  // namespace

FedMessage Router::reply(MsgType type, json payload) {
  return make_message(type, kRtiId, 0.0, ++seq_, std::move(payload));
}

Outgoing Router::error(ConnId to, const std::string& code, const std::string& message) {
  return {to, reply(MsgType::ERROR, {{"code", code}, {"message", message}})};
}

std::vector<std::string> Router::federates() const {
  std::vector<std::string> ids;
  for (const auto& [id, f] : federates_) ids.push_back(id);
  return ids;
}

json Router::snapshot() const {
  json objs = json::array();
  for (const auto& [name, o] : objects_) {
    objs.push_back({{"instance", name},
                    {"class", o.object_class},
                    {"owner", o.owner},
                    {"time", o.sim_time},
                    {"stale", o.stale},
                    {"attributes", o.attributes}});
  }
  return {{"heartbeat_interval", interval_}, {"objects", objs}};
}

std::vector<Outgoing> Router::handle(ConnId from, const FedMessage& msg, double now) {
  std::vector<Outgoing> out;

  if (msg.type == MsgType::JOIN) {
    if (by_conn_.count(from)) {
      out.push_back(error(from, "already_joined", "connection already joined as " + by_conn_[from]));
      return out;
    }
    const json& p = msg.payload;
    if (!p.contains("protocol") || p.at("protocol") != kProtocolVersion) {
      out.push_back(error(from, "protocol_version",
                          "expected protocol " + std::to_string(kProtocolVersion)));
      return out;
    }
    if (msg.federate_id.empty() || msg.federate_id == kRtiId) {
      out.push_back(error(from, "bad_id", "federate id '" + msg.federate_id + "' is reserved"));
      return out;
    }
    if (federates_.count(msg.federate_id)) {
      out.push_back(error(from, "duplicate_id", "federate '" + msg.federate_id + "' already joined"));
      return out;
    }
    Federate f;
    f.conn = from;
    f.last_heard = now;
    f.last_seq = msg.seq;
    f.any_seq = true;
    federates_[msg.federate_id] = f;
    by_conn_[from] = msg.federate_id;
    out.push_back({from, reply(MsgType::JOIN_ACK, snapshot())});
    return out;
  }

  const auto it = by_conn_.find(from);
  if (it == by_conn_.end() || it->second != msg.federate_id) {
    out.push_back(error(from, "not_joined", "send JOIN first"));
    return out;
  }
  const std::string id = it->second;
  Federate& fed = federates_.at(id);
  if (fed.any_seq && msg.seq <= fed.last_seq) {
    out.push_back(error(from, "seq_order", "seq must increase"));
    return out;
  }
  fed.last_seq = msg.seq;
  fed.any_seq = true;
  fed.last_heard = now;
  const json& p = msg.payload;

  switch (msg.type) {
    case MsgType::HEARTBEAT:
      break;

    case MsgType::RESIGN:
      return remove(id, false);

    case MsgType::PUBLISH: {
      if (!string_field(p, "class") || !string_field(p, "instance") ||
          !p.contains("attributes") || !p.at("attributes").is_array()) {
        out.push_back(error(from, "bad_payload", "PUBLISH needs class, instance, attributes"));
        break;
      }
      std::vector<std::string> schema;
      for (const auto& a : p.at("attributes")) {
        if (!a.is_string()) {
          out.push_back(error(from, "bad_payload", "attribute names are strings"));
          return out;
        }
        schema.push_back(a.get<std::string>());
      }
      const std::string inst = p.at("instance").get<std::string>();
      const std::string cls = p.at("class").get<std::string>();
      auto obj = objects_.find(inst);
      if (obj != objects_.end()) {
        const bool orphan = obj->second.stale || !federates_.count(obj->second.owner);
        if (obj->second.owner != id && !orphan) {
          out.push_back(error(from, "ownership", "'" + inst + "' is owned by " + obj->second.owner));
          break;
        }
        if (obj->second.object_class != cls) {
          out.push_back(error(from, "class_mismatch", "'" + inst + "' is a " + obj->second.object_class));
          break;
        }
      }
      ObjectRecord& rec = objects_[inst];
      rec.object_class = cls;
      rec.owner = id;
      rec.schema = schema;
      rec.stale = false;
      break;
    }

    case MsgType::SUBSCRIBE:
      if (!string_field(p, "class")) {
        out.push_back(error(from, "bad_payload", "SUBSCRIBE needs class"));
        break;
      }
      fed.subscriptions.insert(p.at("class").get<std::string>());
      break;

    case MsgType::UPDATE: {
      const std::string inst = instance_of(msg);
      auto obj = objects_.find(inst);
      if (obj == objects_.end() || obj->second.owner != id || obj->second.stale) {
        out.push_back(error(from, "not_owner", "'" + id + "' does not own '" + inst + "'"));
        break;
      }
      if (!p.contains("attributes") || !p.at("attributes").is_object()) {
        out.push_back(error(from, "bad_payload", "UPDATE needs an attributes object"));
        break;
      }
      ObjectRecord& rec = obj->second;
      for (const auto& [k, v] : p.at("attributes").items()) {
        if (std::find(rec.schema.begin(), rec.schema.end(), k) == rec.schema.end()) {
          out.push_back(error(from, "unknown_attribute", "'" + k + "' is not published for " + inst));
          return out;
        }
      }
      for (const auto& [k, v] : p.at("attributes").items()) rec.attributes[k] = v;
      rec.sim_time = msg.sim_time;
      for (const auto& [fid, f] : federates_) {
        if (fid != id && f.subscriptions.count(rec.object_class)) out.push_back({f.conn, msg});
      }
      break;
    }

    case MsgType::INTERACTION: {
      if (!string_field(p, "class")) {
        out.push_back(error(from, "bad_payload", "INTERACTION needs class"));
        break;
      }
      const std::string cls = p.at("class").get<std::string>();
      if (p.contains("to")) {
        if (!p.at("to").is_array()) {
          out.push_back(error(from, "bad_payload", "'to' must list federate ids"));
          break;
        }
        std::vector<ConnId> targets;
        for (const auto& t : p.at("to")) {
          const auto f = t.is_string() ? federates_.find(t.get<std::string>()) : federates_.end();
          if (f == federates_.end() || !f->second.subscriptions.count(cls)) {
            out.push_back(error(from, "unsubscribed_target",
                                "target " + t.dump() + " is not subscribed to " + cls));
            return out;
          }
          targets.push_back(f->second.conn);
        }
        for (ConnId c : targets) out.push_back({c, msg});
      } else {
        for (const auto& [fid, f] : federates_) {
          if (fid != id && f.subscriptions.count(cls)) out.push_back({f.conn, msg});
        }
      }
      break;
    }

    default:
      out.push_back(error(from, "unexpected_type",
                          std::string(to_string(msg.type)) + " is not a federation message"));
  }
  return out;
}

std::vector<Outgoing> Router::remove(const std::string& id, bool forced) {
  std::vector<Outgoing> out;
  const auto it = federates_.find(id);
  if (it == federates_.end()) return out;
  const ConnId conn = it->second.conn;
  federates_.erase(it);
  by_conn_.erase(conn);
  for (auto o = objects_.begin(); o != objects_.end();) {
    if (o->second.owner == id) {
      if (forced) {
        o->second.stale = true;
      } else {
        o = objects_.erase(o);
        continue;
      }
    }
    ++o;
  }
  const json payload{{"federate", id}, {"forced", forced}};
  for (const auto& [fid, f] : federates_) out.push_back({f.conn, reply(MsgType::RESIGN, payload)});
  // A silent federate that is still connected learns it was dropped.
  if (forced) out.push_back({conn, reply(MsgType::RESIGN, payload)});
  return out;
}

std::vector<Outgoing> Router::disconnect(ConnId conn) {
  const auto it = by_conn_.find(conn);
  if (it == by_conn_.end()) return {};
  auto out = remove(it->second, true);
  // Nothing can be delivered to the closed connection.
  out.erase(std::remove_if(out.begin(), out.end(), [&](const Outgoing& o) { return o.to == conn; }),
            out.end());
  return out;
}

std::vector<Outgoing> Router::check_liveness(double now) {
  std::vector<std::string> silent;
  for (const auto& [id, f] : federates_) {
    if (now - f.last_heard >= 3.0 * interval_) silent.push_back(id);
  }
  std::vector<Outgoing> out;
  for (const auto& id : silent) {
    forced_.push_back(id);
    auto o = remove(id, true);
    out.insert(out.end(), o.begin(), o.end());
  }
  return out;
}

bool OutboundQueue::push(FedMessage m) {
  if (q_.size() < bound_) {
    q_.push_back(std::move(m));
    return true;
  }
  if (m.type != MsgType::UPDATE) return false;
  const std::string inst = instance_of(m);
  const auto keys = attribute_keys(m);
  auto victim = std::find_if(q_.begin(), q_.end(), [&](const FedMessage& q) {
    return q.type == MsgType::UPDATE && instance_of(q) == inst && attribute_keys(q) == keys;
  });
  if (victim == q_.end()) {
    victim = std::find_if(q_.begin(), q_.end(),
                          [](const FedMessage& q) { return q.type == MsgType::UPDATE; });
  }
  if (victim == q_.end()) return false;
  q_.erase(victim);
  q_.push_back(std::move(m));
  ++dropped_;
  return true;
}

FedMessage OutboundQueue::pop() {
  FedMessage m = std::move(q_.front());
  q_.pop_front();
  return m;
}

}  // namespace harbour::rti
