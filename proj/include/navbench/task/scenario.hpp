#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "navbench/core/error.hpp"
#include "navbench/core/geometry.hpp"
#include "navbench/crowd/social_force.hpp"
#include "navbench/mapgen/map_generator.hpp"
#include "navbench/robot/kinematics.hpp"
#include "navbench/world/map_io.hpp"
#include "navbench/world/queries.hpp"

namespace navbench {

inline constexpr int kScenarioSchemaVersion = 1;

/// Either a map file (`.json` sidecar or `.pgm`) or an inline generator config.
struct MapRef {
  std::string file;
  std::optional<MapGenConfig> generate;

  std::string label() const {
    if (generate) return map_label(*generate);
    return std::filesystem::path(file).stem().string();
  }
  friend bool operator==(const MapRef& a, const MapRef& b) {
    if (a.file != b.file || a.generate.has_value() != b.generate.has_value()) return false;
    return !a.generate || to_json(*a.generate) == to_json(*b.generate);
  }
};

/// Loads or generates the referenced map. Relative file paths resolve against `base_dir`.
inline OccupancyGrid resolve_map(const MapRef& ref, const std::filesystem::path& base_dir = {}) {
  if (ref.generate) return generate_map(*ref.generate).grid;
  if (ref.file.empty()) throw ConfigError("map reference is empty");
  std::filesystem::path p(ref.file);
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return load_map(p);
}

struct RobotTask {
  std::string spec = "turtlebot3";
  Pose2 start;
  Vec2 goal;
  friend bool operator==(const RobotTask&, const RobotTask&) = default;
};

struct PedestrianSpec {
  Vec2 start;
  std::vector<Vec2> waypoints;
  double v0 = 0.3;
  SocialState state;
  friend bool operator==(const PedestrianSpec&, const PedestrianSpec&) = default;
};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  MapRef map;
  RobotTask robot;
  std::vector<PedestrianSpec> pedestrians;
  CrowdMode crowd_mode = CrowdMode::loop;
  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Pedestrian agents described by a scenario, ids in declaration order.
inline std::vector<SocialAgent> agents_from_scenario(const Scenario& s,
                                                     const SocialForceParams& base = {}) {
  std::vector<SocialAgent> agents;
  for (std::size_t i = 0; i < s.pedestrians.size(); ++i) {
    const auto& p = s.pedestrians[i];
    SocialAgent a;
    a.id = static_cast<int>(i);
    a.position = p.start;
    a.waypoints = p.waypoints;
    a.state = p.state;
    a.params = base;
    a.params.desired_speed = p.v0;
    agents.push_back(std::move(a));
  }
  return agents;
}

// --- validation -------------------------------------------------------------

/// Rejects placements outside the map or touching obstacles, naming the entity.
inline void validate_scenario(const Scenario& s, const OccupancyGrid& grid,
                              const SocialForceParams& ped = {}) {
  RobotSpec robot;
  try {
    robot = resolve_robot(s.robot.spec);
  } catch (const std::exception& e) {
    throw ValidationError("robot.spec: " + std::string(e.what()));
  }
  auto check = [&](Vec2 p, double r, const std::string& what) {
    if (!grid.contains(p)) throw ValidationError(what + ": outside the map");
    if (!is_placeable_disc(grid, p, r)) throw ValidationError(what + ": inside or touching an obstacle");
  };
  check(s.robot.start.position(), robot.radius, "robot.start");
  check(s.robot.goal, robot.radius, "robot.goal");
  if (s.robot.start.position() == s.robot.goal)
    throw ValidationError("robot: start and goal coincide");
  for (std::size_t i = 0; i < s.pedestrians.size(); ++i) {
    const auto& p = s.pedestrians[i];
    const std::string name = "pedestrians[" + std::to_string(i) + "]";
    if (!(p.v0 > 0.0)) throw ValidationError(name + ".v0: must be positive");
    if (p.waypoints.empty()) throw ValidationError(name + ".waypoints: empty");
    check(p.start, ped.agent_radius, name + ".start");
    for (std::size_t k = 0; k < p.waypoints.size(); ++k)
      check(p.waypoints[k], ped.agent_radius, name + ".waypoints[" + std::to_string(k) + "]");
  }
}

// --- JSON -------------------------------------------------------------------

inline nlohmann::json to_json(const SocialState& st) {
  nlohmann::json j = {{"kind", to_string(st.activity)}};
  if (st.activity == Activity::waiting) j["duration"] = st.wait_remaining;
  if (st.activity == Activity::talking) j["group"] = st.group_id;
  return j;
}

inline nlohmann::json to_json(const MapRef& m) {
  if (m.generate) return {{"generate", to_json(*m.generate)}};
  return {{"file", m.file}};
}

inline nlohmann::json point_json(Vec2 p) { return nlohmann::json::array({p.x, p.y}); }

inline nlohmann::json to_json(const Scenario& s) {
  nlohmann::json peds = nlohmann::json::array();
  for (const auto& p : s.pedestrians) {
    nlohmann::json wps = nlohmann::json::array();
    for (const auto& w : p.waypoints) wps.push_back(point_json(w));
    peds.push_back({{"start", point_json(p.start)}, {"waypoints", wps}, {"v0", p.v0},
                    {"state", to_json(p.state)}});
  }
  return {{"schema_version", kScenarioSchemaVersion},
          {"name", s.name},
          {"seed", s.seed},
          {"map", to_json(s.map)},
          {"robot",
           {{"spec", s.robot.spec},
            {"start", {s.robot.start.x, s.robot.start.y, s.robot.start.theta}},
            {"goal", point_json(s.robot.goal)}}},
          {"pedestrians", peds},
          {"crowd_mode", s.crowd_mode == CrowdMode::loop ? "loop" : "respawn"}};
}

namespace detail {

inline Vec2 point(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ParseError(path + ": expected [x, y]");
  return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
}

inline std::string string_field(const nlohmann::json& j, const char* key, const std::string& path) {
  const auto& v = field(j, key, path);
  if (!v.is_string()) throw ParseError(path + "." + key + ": expected a string");
  return v.get<std::string>();
}

inline SocialState state_from_json(const nlohmann::json& j, const std::string& path) {
  const std::string kind = j.is_string() ? j.get<std::string>() : string_field(j, "kind", path);
  if (kind == "walking") return SocialState::walking();
  if (kind == "running") return SocialState::running();
  if (kind == "waiting") {
    const double d = number(field(j, "duration", path), path + ".duration");
    if (!(d >= 0.0)) throw ParseError(path + ".duration: must be >= 0");
    return SocialState::waiting(d);
  }
  if (kind == "talking") {
    const auto& g = field(j, "group", path);
    if (!g.is_number_integer()) throw ParseError(path + ".group: expected an integer");
    return SocialState::talking(g.get<int>());
  }
  throw ParseError(path + ".kind: unknown state '" + kind + "'");
}

}  // namespace detail

inline MapRef map_ref_from_json(const nlohmann::json& j, const std::string& path = "map") {
  MapRef m;
  if (j.is_string()) {
    m.file = j.get<std::string>();
  } else if (j.contains("generate")) {
    m.generate = mapgen_from_json(j["generate"], path + ".generate");
  } else {
    m.file = detail::string_field(j, "file", path);
  }
  return m;
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("$: expected an object");
  const auto& ver = detail::field(j, "schema_version", "$");
  if (!ver.is_number_integer() || ver.get<int>() != kScenarioSchemaVersion)
    throw ParseError("$.schema_version: unsupported (expected 1)");
  Scenario s;
  if (j.contains("name")) s.name = detail::string_field(j, "name", "$");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      throw ParseError("$.seed: expected an integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  s.map = map_ref_from_json(detail::field(j, "map", "$"), "$.map");
  const auto& r = detail::field(j, "robot", "$");
  s.robot.spec = detail::string_field(r, "spec", "$.robot");
  const auto& st = detail::field(r, "start", "$.robot");
  if (!st.is_array() || (st.size() != 2 && st.size() != 3))
    throw ParseError("$.robot.start: expected [x, y] or [x, y, theta]");
  s.robot.start = {detail::number(st[0], "$.robot.start[0]"), detail::number(st[1], "$.robot.start[1]"),
                   st.size() == 3 ? detail::number(st[2], "$.robot.start[2]") : 0.0};
  s.robot.goal = detail::point(detail::field(r, "goal", "$.robot"), "$.robot.goal");
  if (j.contains("pedestrians")) {
    const auto& peds = j["pedestrians"];
    if (!peds.is_array()) throw ParseError("$.pedestrians: expected an array");
    for (std::size_t i = 0; i < peds.size(); ++i) {
      const std::string path = "$.pedestrians[" + std::to_string(i) + "]";
      const auto& pj = peds[i];
      PedestrianSpec p;
      p.start = detail::point(detail::field(pj, "start", path), path + ".start");
      const auto& wps = detail::field(pj, "waypoints", path);
      if (!wps.is_array()) throw ParseError(path + ".waypoints: expected an array");
      for (std::size_t k = 0; k < wps.size(); ++k)
        p.waypoints.push_back(detail::point(wps[k], path + ".waypoints[" + std::to_string(k) + "]"));
      if (pj.contains("v0")) p.v0 = detail::number(pj["v0"], path + ".v0");
      if (pj.contains("state")) p.state = detail::state_from_json(pj["state"], path + ".state");
      s.pedestrians.push_back(std::move(p));
    }
  }
  if (j.contains("crowd_mode")) {
    const auto mode = detail::string_field(j, "crowd_mode", "$");
    if (mode == "loop") s.crowd_mode = CrowdMode::loop;
    else if (mode == "respawn") s.crowd_mode = CrowdMode::respawn;
    else throw ParseError("$.crowd_mode: expected 'loop' or 'respawn'");
  }
  return s;
}

inline void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  detail::write_file(path, to_json(s).dump(2) + "\n");
}

/// Parses and validates a scenario file. The referenced map resolves relative
/// to the scenario's directory.
inline Scenario load_scenario(const std::filesystem::path& path, bool validate = true) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  Scenario s;
  try {
    s = scenario_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (validate) validate_scenario(s, resolve_map(s.map, path.parent_path()));
  return s;
}

}  // namespace navbench
