#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "navbench/core/error.hpp"
#include "navbench/core/geometry.hpp"
#include "navbench/robot/kinematics.hpp"

namespace navbench {

/// Scenario and configuration facts an episode was run under.
struct EpisodeMeta {
  std::string episode_id;
  std::string scenario;
  std::string map;
  std::string robot;
  std::string planner;
  int obstacle_count = 0;
  int run = 0;
  std::uint64_t seed = 0;
  double dt = 0.05;
  double timeout = 60.0;
  double robot_radius = 0.1;
  double lidar_max_range = 3.5;
  bool holonomic = false;
  Pose2 start;
  Vec2 goal;
  friend bool operator==(const EpisodeMeta&, const EpisodeMeta&) = default;
};

/// Robot state at one simulation step.
struct Sample {
  double stamp = 0.0;
  Pose2 pose;
  VelocityCommand velocity;  ///< body frame
  double min_scan = 0.0;     ///< shortest lidar range at this step
  double clearance = 0.0;    ///< gap between robot footprint and nearest obstacle, >= 0
  friend bool operator==(const Sample&, const Sample&) = default;
};

namespace event {
inline constexpr const char* collision_start = "collision_start";
inline constexpr const char* collision_end = "collision_end";
inline constexpr const char* goal_reached = "goal_reached";
inline constexpr const char* timeout = "timeout";
inline constexpr const char* planner_error = "planner_error";
inline constexpr const char* deadline_missed = "deadline_missed";
inline constexpr const char* no_global_path = "no_global_path";
}  // namespace event

struct Event {
  double stamp = 0.0;
  std::string type;
  std::string detail;
  friend bool operator==(const Event&, const Event&) = default;
};

/// Outcome of an episode as recorded by its final event.
enum class EpisodeStatus { goal_reached, timeout, planner_error, incomplete };

inline const char* to_string(EpisodeStatus s) {
  switch (s) {
    case EpisodeStatus::goal_reached: return "goal_reached";
    case EpisodeStatus::timeout: return "timeout";
    case EpisodeStatus::planner_error: return "planner_error";
    case EpisodeStatus::incomplete: return "incomplete";
  }
  return "?";
}

struct EpisodeRecord {
  EpisodeMeta meta;
  std::vector<Sample> samples;
  std::vector<Event> events;

  const Event* find_event(std::string_view type) const {
    for (const auto& e : events)
      if (e.type == type) return &e;
    return nullptr;
  }

  std::size_t count_events(std::string_view type) const {
    std::size_t n = 0;
    for (const auto& e : events) n += e.type == type ? 1 : 0;
    return n;
  }

  EpisodeStatus status() const {
    if (find_event(event::planner_error)) return EpisodeStatus::planner_error;
    if (find_event(event::goal_reached)) return EpisodeStatus::goal_reached;
    if (find_event(event::timeout)) return EpisodeStatus::timeout;
    return EpisodeStatus::incomplete;
  }

  friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

// --- JSON-Lines ---------------------------------------------------------------
// Line 1: {"kind":"header",...}; then one {"kind":"sample"} per step; then one
// {"kind":"event"} per event. Numbers use shortest round-trip formatting, so a
// write/read cycle reproduces every double bit for bit.

inline nlohmann::json to_json(const EpisodeMeta& m) {
  return {{"kind", "header"},
          {"format", "navbench-episode"},
          {"version", 1},
          {"episode_id", m.episode_id},
          {"scenario", m.scenario},
          {"map", m.map},
          {"robot", m.robot},
          {"planner", m.planner},
          {"obstacle_count", m.obstacle_count},
          {"run", m.run},
          {"seed", m.seed},
          {"dt", m.dt},
          {"timeout", m.timeout},
          {"robot_radius", m.robot_radius},
          {"lidar_max_range", m.lidar_max_range},
          {"holonomic", m.holonomic},
          {"start", {m.start.x, m.start.y, m.start.theta}},
          {"goal", {m.goal.x, m.goal.y}}};
}

inline nlohmann::json to_json(const Sample& s) {
  return {{"kind", "sample"},
          {"t", s.stamp},
          {"pose", {s.pose.x, s.pose.y, s.pose.theta}},
          {"vel", {s.velocity.vx, s.velocity.vy, s.velocity.omega}},
          {"min_scan", s.min_scan},
          {"clearance", s.clearance}};
}

inline nlohmann::json to_json(const Event& e) {
  nlohmann::json j = {{"kind", "event"}, {"t", e.stamp}, {"type", e.type}};
  if (!e.detail.empty()) j["detail"] = e.detail;
  return j;
}

inline std::string to_jsonl(const EpisodeRecord& r) {
  std::string out = to_json(r.meta).dump();
  out.push_back('\n');
  for (const auto& s : r.samples) {
    out += to_json(s).dump();
    out.push_back('\n');
  }
  for (const auto& e : r.events) {
    out += to_json(e).dump();
    out.push_back('\n');
  }
  return out;
}

namespace detail {

template <std::size_t N>
std::array<double, N> fixed_array(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != N)
    throw ParseError(std::string("field '") + key + "' must have " + std::to_string(N) + " numbers");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = v[i].get<double>();
  return out;
}

}  // namespace detail

/// Parses a record; `source` names the input in error messages.
inline EpisodeRecord episode_from_jsonl(std::string_view text, const std::string& source = "record") {
  EpisodeRecord r;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "header") {
        EpisodeMeta& m = r.meta;
        m.episode_id = j.at("episode_id").get<std::string>();
        m.scenario = j.value("scenario", std::string());
        m.map = j.value("map", std::string());
        m.robot = j.at("robot").get<std::string>();
        m.planner = j.at("planner").get<std::string>();
        m.obstacle_count = j.value("obstacle_count", 0);
        m.run = j.value("run", 0);
        m.seed = j.value("seed", std::uint64_t{0});
        m.dt = j.at("dt").get<double>();
        m.timeout = j.value("timeout", 0.0);
        m.robot_radius = j.at("robot_radius").get<double>();
        m.lidar_max_range = j.at("lidar_max_range").get<double>();
        m.holonomic = j.value("holonomic", false);
        const auto st = detail::fixed_array<3>(j, "start");
        m.start = {st[0], st[1], st[2]};
        const auto g = detail::fixed_array<2>(j, "goal");
        m.goal = {g[0], g[1]};
        have_header = true;
      } else if (kind == "sample") {
        Sample s;
        s.stamp = j.at("t").get<double>();
        const auto p = detail::fixed_array<3>(j, "pose");
        s.pose = {p[0], p[1], p[2]};
        const auto v = detail::fixed_array<3>(j, "vel");
        s.velocity = {v[0], v[1], v[2]};
        s.min_scan = j.at("min_scan").get<double>();
        s.clearance = j.at("clearance").get<double>();
        r.samples.push_back(s);
      } else if (kind == "event") {
        r.events.push_back({j.at("t").get<double>(), j.at("type").get<std::string>(),
                            j.value("detail", std::string())});
      } else {
        throw ParseError("unknown line kind '" + kind + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw ParseError(source + ": missing header line");
  return r;
}

/// Writes atomically: the file appears complete or not at all.
inline void save_episode(const EpisodeRecord& r, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << to_jsonl(r);
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline EpisodeRecord load_episode(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return episode_from_jsonl(ss.str(), path.string());
}

}  // namespace navbench
