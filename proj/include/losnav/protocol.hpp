#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "losnav/geometry.hpp"
#include "losnav/perception.hpp"
#include "losnav/world.hpp"

namespace losnav {

// One datagram carries one message and never exceeds this.
inline constexpr std::size_t kMaxDatagramBytes = 1400;

class MessageTooLargeError : public std::runtime_error {
 public:
  MessageTooLargeError() : std::runtime_error("encoded message exceeds 1400 bytes") {}
};

// Robot state snapshot crossing the robot -> control boundary.
struct ImuAngles {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  bool operator==(const ImuAngles&) const = default;
};

struct Telemetry {
  std::uint64_t seq = 0;
  std::uint64_t timestamp_ms = 0;
  Pose2D pose;
  VelocityCommand velocity;
  ImuAngles imu;
  UltrasonicReading ultrasonic;
  bool operator==(const Telemetry&) const = default;
};

struct TargetRequest {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const TargetRequest&) const = default;
};

enum class MessageType { DetectionReport, Telemetry, Command, TargetRequest };

inline const char* message_type_name(MessageType t) {
  switch (t) {
    case MessageType::DetectionReport: return "detection_report";
    case MessageType::Telemetry: return "telemetry";
    case MessageType::Command: return "command";
    case MessageType::TargetRequest: return "target_request";
  }
  return "?";
}

struct WireMessage {
  MessageType type = MessageType::Command;
  std::uint64_t seq = 0;
  std::uint64_t timestamp_ms = 0;
  std::variant<DetectionReport, Telemetry, VelocityCommand, TargetRequest> payload;
  bool operator==(const WireMessage&) const = default;
};

inline WireMessage make_message(const DetectionReport& r) {
  return {MessageType::DetectionReport, r.seq, r.timestamp_ms, r};
}
inline WireMessage make_message(const Telemetry& t) {
  return {MessageType::Telemetry, t.seq, t.timestamp_ms, t};
}
inline WireMessage make_message(const VelocityCommand& c, std::uint64_t seq,
                                std::uint64_t timestamp_ms) {
  return {MessageType::Command, seq, timestamp_ms, c};
}
inline WireMessage make_message(const TargetRequest& t, std::uint64_t seq,
                                std::uint64_t timestamp_ms) {
  return {MessageType::TargetRequest, seq, timestamp_ms, t};
}

enum class DecodeStatus { Ok, Malformed, Invalid, UnknownType };

struct DecodeResult {
  DecodeStatus status = DecodeStatus::Ok;
  std::string error;
  std::optional<WireMessage> message;
};

namespace wire_detail {

// Canonical number rendering: up to 9 significant digits, no trailing zeros,
// negative zero normalized. Re-parsing and re-rendering is byte-stable.
inline void append_number(std::string& out, double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("wire message holds non-finite number");
  if (x == 0.0) {
    out += '0';
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  out += buf;
}

inline void append_string(std::string& out, std::string_view s) {
  out += '"';
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

inline const char* zone_name(Zone z) {
  switch (z) {
    case Zone::Left: return "left";
    case Zone::Front: return "front";
    case Zone::Right: return "right";
    case Zone::Ignored: break;
  }
  throw std::invalid_argument("ignored detections never cross the wire");
}

inline const char* kind_name(DetectionKind k) {
  return k == DetectionKind::Obstacle ? "obstacle" : "device";
}

// Payload writers emit object members in sorted field order.

inline void append_payload(std::string& out, const DetectionReport& r) {
  out += "{\"detections\":[";
  bool first = true;
  for (const auto& d : r.detections) {
    if (!first) out += ',';
    first = false;
    out += "{\"close\":";
    out += d.close ? "true" : "false";
    if (d.est_distance) {
      out += ",\"est_distance\":";
      append_number(out, *d.est_distance);
    }
    out += ",\"kind\":";
    out += '"';
    out += kind_name(d.kind);
    out += '"';
    out += ",\"source_id\":";
    append_string(out, d.source_id);
    out += ",\"zone\":";
    out += '"';
    out += zone_name(d.zone);
    out += '"';
    out += '}';
  }
  out += "]}";
}

inline void append_payload(std::string& out, const Telemetry& t) {
  out += "{\"imu\":{\"pitch\":";
  append_number(out, t.imu.pitch);
  out += ",\"roll\":";
  append_number(out, t.imu.roll);
  out += ",\"yaw\":";
  append_number(out, t.imu.yaw);
  out += "},\"pose\":{\"theta\":";
  append_number(out, t.pose.heading);
  out += ",\"x\":";
  append_number(out, t.pose.position.x);
  out += ",\"y\":";
  append_number(out, t.pose.position.y);
  out += "},\"ultrasonic\":{\"front\":";
  append_number(out, t.ultrasonic.front);
  out += ",\"left\":";
  append_number(out, t.ultrasonic.left);
  out += ",\"right\":";
  append_number(out, t.ultrasonic.right);
  out += "},\"velocity\":{\"omega\":";
  append_number(out, t.velocity.angular);
  out += ",\"v\":";
  append_number(out, t.velocity.linear);
  out += "}}";
}

inline void append_payload(std::string& out, const VelocityCommand& c) {
  out += "{\"angular\":";
  append_number(out, c.angular);
  out += ",\"linear\":";
  append_number(out, c.linear);
  out += '}';
}

inline void append_payload(std::string& out, const TargetRequest& t) {
  out += "{\"x\":";
  append_number(out, t.x);
  out += ",\"y\":";
  append_number(out, t.y);
  out += '}';
}

}  // namespace wire_detail

// Canonical text serialization: one object, sorted field names, no
// insignificant whitespace. encode(decode(encode(m))) == encode(m) holds
// byte-for-byte.
inline std::string encode(const WireMessage& msg) {
  std::string out;
  out.reserve(256);
  out += "{\"payload\":";
  std::visit([&](const auto& p) { wire_detail::append_payload(out, p); }, msg.payload);
  out += ",\"seq\":";
  out += std::to_string(msg.seq);
  out += ",\"timestamp_ms\":";
  out += std::to_string(msg.timestamp_ms);
  out += ",\"type\":\"";
  out += message_type_name(msg.type);
  out += "\"}";
  if (out.size() > kMaxDatagramBytes) throw MessageTooLargeError{};
  return out;
}

namespace wire_detail {

using json = nlohmann::json;

struct FieldError : std::runtime_error {
  DecodeStatus status;
  FieldError(DecodeStatus s, const std::string& what) : std::runtime_error(what), status(s) {}
};

inline void require_keys(const json& obj, std::initializer_list<const char*> required,
                         std::initializer_list<const char*> optional = {}) {
  if (!obj.is_object()) throw FieldError{DecodeStatus::Malformed, "expected object"};
  for (const char* k : required) {
    if (!obj.contains(k)) {
      throw FieldError{DecodeStatus::Malformed, std::string("missing field: ") + k};
    }
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    auto in = [&](std::initializer_list<const char*> set) {
      for (const char* k : set) {
        if (it.key() == k) return true;
      }
      return false;
    };
    if (!in(required) && !in(optional)) {
      throw FieldError{DecodeStatus::Malformed, "unknown field: " + it.key()};
    }
  }
}

inline double get_finite(const json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw FieldError{DecodeStatus::Malformed, std::string(key) + ": expected number"};
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw FieldError{DecodeStatus::Invalid, std::string(key) + ": not finite"};
  return x;
}

inline double get_wrapped_angle(const json& obj, const char* key) {
  const double x = get_finite(obj, key);
  if (!(x > -kPi && x <= kPi)) {
    throw FieldError{DecodeStatus::Invalid, std::string(key) + ": angle not wrapped to (-pi, pi]"};
  }
  return x;
}

inline double get_nonnegative(const json& obj, const char* key) {
  const double x = get_finite(obj, key);
  if (x < 0.0) throw FieldError{DecodeStatus::Invalid, std::string(key) + ": negative"};
  return x;
}

inline std::uint64_t get_counter(const json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned()) {
    throw FieldError{DecodeStatus::Malformed, std::string(key) + ": expected unsigned integer"};
  }
  return v.get<std::uint64_t>();
}

inline DetectionReport parse_report(const json& p, std::uint64_t seq, std::uint64_t ts) {
  require_keys(p, {"detections"});
  const auto& arr = p.at("detections");
  if (!arr.is_array()) throw FieldError{DecodeStatus::Malformed, "detections: expected array"};
  DetectionReport report{seq, ts, {}};
  for (const auto& jd : arr) {
    require_keys(jd, {"close", "kind", "source_id", "zone"}, {"est_distance"});
    Detection d;
    if (!jd.at("close").is_boolean()) {
      throw FieldError{DecodeStatus::Malformed, "close: expected boolean"};
    }
    d.close = jd.at("close").get<bool>();
    const auto kind = jd.at("kind").get<std::string>();
    if (kind == "obstacle") {
      d.kind = DetectionKind::Obstacle;
    } else if (kind == "device") {
      d.kind = DetectionKind::Device;
    } else {
      throw FieldError{DecodeStatus::Invalid, "kind: unknown value"};
    }
    const auto zone = jd.at("zone").get<std::string>();
    if (zone == "left") {
      d.zone = Zone::Left;
    } else if (zone == "front") {
      d.zone = Zone::Front;
    } else if (zone == "right") {
      d.zone = Zone::Right;
    } else {
      throw FieldError{DecodeStatus::Invalid, "zone: unknown value"};
    }
    if (jd.contains("est_distance")) d.est_distance = get_nonnegative(jd, "est_distance");
    if (d.close && !d.est_distance) {
      throw FieldError{DecodeStatus::Invalid, "close detection without est_distance"};
    }
    if (!jd.at("source_id").is_string()) {
      throw FieldError{DecodeStatus::Malformed, "source_id: expected string"};
    }
    d.source_id = jd.at("source_id").get<std::string>();
    report.detections.push_back(std::move(d));
  }
  return report;
}

inline Telemetry parse_telemetry(const json& p, std::uint64_t seq, std::uint64_t ts) {
  require_keys(p, {"imu", "pose", "ultrasonic", "velocity"});
  Telemetry t;
  t.seq = seq;
  t.timestamp_ms = ts;
  const auto& imu = p.at("imu");
  require_keys(imu, {"pitch", "roll", "yaw"});
  t.imu = {get_wrapped_angle(imu, "yaw"), get_wrapped_angle(imu, "pitch"),
           get_wrapped_angle(imu, "roll")};
  const auto& pose = p.at("pose");
  require_keys(pose, {"theta", "x", "y"});
  t.pose.position = {get_finite(pose, "x"), get_finite(pose, "y")};
  t.pose.heading = get_wrapped_angle(pose, "theta");
  const auto& us = p.at("ultrasonic");
  require_keys(us, {"front", "left", "right"});
  t.ultrasonic = {get_nonnegative(us, "left"), get_nonnegative(us, "front"),
                  get_nonnegative(us, "right")};
  const auto& vel = p.at("velocity");
  require_keys(vel, {"omega", "v"});
  t.velocity = {get_finite(vel, "v"), get_finite(vel, "omega")};
  return t;
}

}  // namespace wire_detail

// Strict inverse of encode: unknown fields, missing fields and malformed
// syntax are rejected as Malformed; invariant violations as Invalid.
inline DecodeResult decode(std::string_view bytes) {
  using wire_detail::json;
  if (bytes.size() > kMaxDatagramBytes) {
    return {DecodeStatus::Malformed, "datagram exceeds 1400 bytes", std::nullopt};
  }
  const json root = json::parse(bytes, nullptr, /*allow_exceptions=*/false);
  if (root.is_discarded()) return {DecodeStatus::Malformed, "invalid JSON", std::nullopt};
  try {
    wire_detail::require_keys(root, {"payload", "seq", "timestamp_ms", "type"});
    if (!root.at("type").is_string()) {
      return {DecodeStatus::Malformed, "type: expected string", std::nullopt};
    }
    const auto type = root.at("type").get<std::string>();
    const std::uint64_t seq = wire_detail::get_counter(root, "seq");
    const std::uint64_t ts = wire_detail::get_counter(root, "timestamp_ms");
    const auto& payload = root.at("payload");
    WireMessage msg;
    msg.seq = seq;
    msg.timestamp_ms = ts;
    if (type == "detection_report") {
      msg.type = MessageType::DetectionReport;
      msg.payload = wire_detail::parse_report(payload, seq, ts);
    } else if (type == "telemetry") {
      msg.type = MessageType::Telemetry;
      msg.payload = wire_detail::parse_telemetry(payload, seq, ts);
    } else if (type == "command") {
      msg.type = MessageType::Command;
      wire_detail::require_keys(payload, {"angular", "linear"});
      msg.payload = VelocityCommand{wire_detail::get_finite(payload, "linear"),
                                    wire_detail::get_finite(payload, "angular")};
    } else if (type == "target_request") {
      msg.type = MessageType::TargetRequest;
      wire_detail::require_keys(payload, {"x", "y"});
      msg.payload = TargetRequest{wire_detail::get_finite(payload, "x"),
                                  wire_detail::get_finite(payload, "y")};
    } else {
      return {DecodeStatus::UnknownType, "unknown type: " + type, std::nullopt};
    }
    return {DecodeStatus::Ok, "", std::move(msg)};
  } catch (const wire_detail::FieldError& e) {
    return {e.status, e.what(), std::nullopt};
  } catch (const json::exception& e) {
    return {DecodeStatus::Malformed, e.what(), std::nullopt};
  }
}

// Rounds a value through the canonical 9-digit wire rendering. Applying the
// same rounding to in-process hand-offs keeps both transports on the exact
// wire domain, so split-process and in-process runs evolve identically.
inline double canonical_value(double x) {
  std::string s;
  wire_detail::append_number(s, x);
  return std::strtod(s.c_str(), nullptr);
}

inline VelocityCommand canonical_value(const VelocityCommand& c) {
  return {canonical_value(c.linear), canonical_value(c.angular)};
}

inline Pose2D canonical_value(const Pose2D& p) {
  return {{canonical_value(p.position.x), canonical_value(p.position.y)},
          canonical_value(p.heading)};
}

inline UltrasonicReading canonical_value(const UltrasonicReading& u) {
  return {canonical_value(u.left), canonical_value(u.front), canonical_value(u.right)};
}

inline Telemetry canonical_value(const Telemetry& t) {
  Telemetry out = t;
  out.pose = canonical_value(t.pose);
  out.velocity = canonical_value(t.velocity);
  out.imu = {canonical_value(t.imu.yaw), canonical_value(t.imu.pitch),
             canonical_value(t.imu.roll)};
  out.ultrasonic = canonical_value(t.ultrasonic);
  return out;
}

}  // namespace losnav
