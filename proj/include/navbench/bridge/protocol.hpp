#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "navbench/core/error.hpp"
#include "navbench/core/geometry.hpp"
#include "navbench/robot/kinematics.hpp"
#include "navbench/world/lidar.hpp"

// Newline-delimited JSON messages exchanged with external planners.
// Field-by-field grammar: docs/protocol.md.

namespace navbench::bridge {

inline constexpr int kProtocolVersion = 1;

struct MapMeta {
  int width = 0;
  int height = 0;
  double resolution = 0.0;
  Vec2 origin;
  friend bool operator==(const MapMeta&, const MapMeta&) = default;
};

struct ResetMsg {
  int protocol_version = kProtocolVersion;
  std::string episode;
  RobotSpec robot;
  MapMeta map;
  Vec2 goal;
  double dt = 0.05;
  double command_period = 0.1;
  friend bool operator==(const ResetMsg&, const ResetMsg&) = default;
};

struct ReadyMsg {
  int protocol_version = kProtocolVersion;
  std::string episode;
};

struct ObservationMsg {
  std::string episode;
  double stamp = 0.0;
  std::vector<double> scan;
  Pose2 pose;
  VelocityCommand velocity;
  Vec2 subgoal;
  Vec2 goal;
  std::string robot;
  friend bool operator==(const ObservationMsg&, const ObservationMsg&) = default;
};

struct CommandMsg {
  std::string episode;
  double stamp = 0.0;
  VelocityCommand cmd;
  friend bool operator==(const CommandMsg&, const CommandMsg&) = default;
};

struct CloseMsg {
  std::string episode;
  std::string status;
};

// --- encoding ---------------------------------------------------------------

inline std::string encode(const ResetMsg& m) {
  nlohmann::json j = {
      {"type", "reset"},
      {"protocol_version", m.protocol_version},
      {"episode", m.episode},
      {"robot", to_json(m.robot)},
      {"map", {{"width", m.map.width}, {"height", m.map.height}, {"resolution", m.map.resolution},
               {"origin", {m.map.origin.x, m.map.origin.y}}}},
      {"goal", {m.goal.x, m.goal.y}},
      {"dt", m.dt},
      {"command_period", m.command_period}};
  return j.dump();
}

inline std::string encode(const ReadyMsg& m) {
  return nlohmann::json{{"type", "ready"}, {"protocol_version", m.protocol_version}, {"episode", m.episode}}
      .dump();
}

inline std::string encode(const ObservationMsg& m) {
  nlohmann::json j = {{"type", "observe"},
                      {"episode", m.episode},
                      {"stamp", m.stamp},
                      {"scan", m.scan},
                      {"pose", {m.pose.x, m.pose.y, m.pose.theta}},
                      {"velocity", {m.velocity.vx, m.velocity.vy, m.velocity.omega}},
                      {"subgoal", {m.subgoal.x, m.subgoal.y}},
                      {"goal", {m.goal.x, m.goal.y}},
                      {"robot", m.robot}};
  return j.dump();
}

inline std::string encode(const CommandMsg& m) {
  return nlohmann::json{{"type", "cmd"},  {"episode", m.episode}, {"stamp", m.stamp},
                        {"vx", m.cmd.vx}, {"vy", m.cmd.vy},       {"omega", m.cmd.omega}}
      .dump();
}

inline std::string encode(const CloseMsg& m) {
  return nlohmann::json{{"type", "close"}, {"episode", m.episode}, {"status", m.status}}.dump();
}

// --- decoding ---------------------------------------------------------------

namespace detail {

inline nlohmann::json parse_line(std::string_view line) {
  try {
    auto j = nlohmann::json::parse(line);
    if (!j.is_object()) throw ProtocolError("malformed message: top level is not an object (byte 0)");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError("malformed message at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

inline const nlohmann::json& req(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ProtocolError(std::string("malformed message: missing field '") + key + "'");
  return *it;
}

inline double num(const nlohmann::json& j, const char* key) {
  const auto& v = req(j, key);
  if (!v.is_number()) throw ProtocolError(std::string("malformed message: field '") + key + "' is not a number");
  return v.get<double>();
}

inline std::string str(const nlohmann::json& j, const char* key) {
  const auto& v = req(j, key);
  if (!v.is_string()) throw ProtocolError(std::string("malformed message: field '") + key + "' is not a string");
  return v.get<std::string>();
}

inline std::vector<double> nums(const nlohmann::json& j, const char* key, std::size_t expect = 0) {
  const auto& v = req(j, key);
  if (!v.is_array() || (expect != 0 && v.size() != expect))
    throw ProtocolError(std::string("malformed message: field '") + key + "' has the wrong shape");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number())
      throw ProtocolError(std::string("malformed message: field '") + key + "[" + std::to_string(i) +
                          "]' is not a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

inline void expect_type(const nlohmann::json& j, const char* type) {
  const std::string t = str(j, "type");
  if (t != type)
    throw ProtocolError("unexpected message type '" + t + "', expected '" + type + "'");
}

}  // namespace detail

/// Value of the "type" field of a line, validating only the framing.
inline std::string message_type(std::string_view line) {
  return detail::str(detail::parse_line(line), "type");
}

inline ResetMsg decode_reset(std::string_view line) {
  const auto j = detail::parse_line(line);
  detail::expect_type(j, "reset");
  ResetMsg m;
  const auto& v = detail::req(j, "protocol_version");
  if (!v.is_number_integer()) throw ProtocolError("malformed message: field 'protocol_version' is not an integer");
  m.protocol_version = v.get<int>();
  m.episode = detail::str(j, "episode");
  try {
    m.robot = robot_from_json(detail::req(j, "robot"));
  } catch (const std::exception& e) {
    throw ProtocolError(std::string("malformed message: field 'robot': ") + e.what());
  }
  const auto& map = detail::req(j, "map");
  m.map.width = static_cast<int>(detail::num(map, "width"));
  m.map.height = static_cast<int>(detail::num(map, "height"));
  m.map.resolution = detail::num(map, "resolution");
  const auto o = detail::nums(map, "origin", 2);
  m.map.origin = {o[0], o[1]};
  const auto g = detail::nums(j, "goal", 2);
  m.goal = {g[0], g[1]};
  m.dt = detail::num(j, "dt");
  m.command_period = detail::num(j, "command_period");
  return m;
}

inline ReadyMsg decode_ready(std::string_view line) {
  const auto j = detail::parse_line(line);
  const std::string t = detail::str(j, "type");
  if (t == "refuse")
    throw ProtocolError("planner refused the session: " + j.value("reason", std::string("no reason")));
  detail::expect_type(j, "ready");
  const auto& v = detail::req(j, "protocol_version");
  if (!v.is_number_integer()) throw ProtocolError("malformed message: field 'protocol_version' is not an integer");
  return {v.get<int>(), detail::str(j, "episode")};
}

inline ObservationMsg decode_observation(std::string_view line) {
  const auto j = detail::parse_line(line);
  detail::expect_type(j, "observe");
  ObservationMsg m;
  m.episode = detail::str(j, "episode");
  m.stamp = detail::num(j, "stamp");
  m.scan = detail::nums(j, "scan");
  const auto p = detail::nums(j, "pose", 3);
  m.pose = {p[0], p[1], p[2]};
  const auto v = detail::nums(j, "velocity", 3);
  m.velocity = {v[0], v[1], v[2]};
  const auto s = detail::nums(j, "subgoal", 2);
  m.subgoal = {s[0], s[1]};
  const auto g = detail::nums(j, "goal", 2);
  m.goal = {g[0], g[1]};
  m.robot = detail::str(j, "robot");
  return m;
}

inline CommandMsg decode_command(std::string_view line) {
  const auto j = detail::parse_line(line);
  detail::expect_type(j, "cmd");
  CommandMsg m;
  m.episode = detail::str(j, "episode");
  m.stamp = detail::num(j, "stamp");
  m.cmd.vx = detail::num(j, "vx");
  m.cmd.vy = j.contains("vy") ? detail::num(j, "vy") : 0.0;
  m.cmd.omega = detail::num(j, "omega");
  return m;
}

inline CloseMsg decode_close(std::string_view line) {
  const auto j = detail::parse_line(line);
  detail::expect_type(j, "close");
  return {detail::str(j, "episode"), j.value("status", std::string())};
}

}  // namespace navbench::bridge
