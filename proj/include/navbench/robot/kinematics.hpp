#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "navbench/core/error.hpp"
#include "navbench/core/geometry.hpp"
#include "navbench/world/lidar.hpp"

namespace navbench {

enum class Kinematics { differential, holonomic, car_like };

inline const char* to_string(Kinematics k) {
  switch (k) {
    case Kinematics::differential: return "differential";
    case Kinematics::holonomic: return "holonomic";
    case Kinematics::car_like: return "car-like";
  }
  return "differential";
}

inline Kinematics kinematics_from_string(const std::string& s) {
  if (s == "differential") return Kinematics::differential;
  if (s == "holonomic") return Kinematics::holonomic;
  if (s == "car-like" || s == "car_like") return Kinematics::car_like;
  throw ParseError("unknown kinematics '" + s + "'");
}

struct Interval {
  double min = 0.0;
  double max = 0.0;

  double clamp(double v) const { return std::clamp(v, min, max); }
  bool contains(double v) const { return v >= min && v <= max; }
  double width() const { return max - min; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct ActionBounds {
  Interval vlin_x;
  Interval vlin_y;  ///< [0, 0] for non-holonomic bases
  Interval vang;
  friend bool operator==(const ActionBounds&, const ActionBounds&) = default;
};

struct AccelLimits {
  double lin = 2.5;  ///< m/s^2
  double ang = 3.2;  ///< rad/s^2
  friend bool operator==(const AccelLimits&, const AccelLimits&) = default;
};

struct RobotSpec {
  std::string name;
  Kinematics kinematics = Kinematics::differential;
  double radius = 0.2;
  ActionBounds bounds;
  AccelLimits accel;
  LidarSpec lidar;

  bool holonomic() const { return kinematics == Kinematics::holonomic; }

  void validate() const {
    if (!(radius > 0.0)) throw DomainError("robot '" + name + "': radius must be positive");
    if (!(accel.lin > 0.0) || !(accel.ang > 0.0))
      throw DomainError("robot '" + name + "': acceleration limits must be positive");
    for (const Interval* iv : {&bounds.vlin_x, &bounds.vlin_y, &bounds.vang})
      if (!(iv->min <= iv->max)) throw DomainError("robot '" + name + "': bound min > max");
    if (!holonomic() && (bounds.vlin_y.min != 0.0 || bounds.vlin_y.max != 0.0))
      throw DomainError("robot '" + name + "': non-holonomic base needs vlin_y = [0, 0]");
    lidar.validate();
  }
  friend bool operator==(const RobotSpec&, const RobotSpec&) = default;
};

struct VelocityCommand {
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;
  friend bool operator==(const VelocityCommand&, const VelocityCommand&) = default;
};

struct RobotState {
  Pose2 pose;
  VelocityCommand velocity;  ///< body frame
  double stamp = 0.0;
  friend bool operator==(const RobotState&, const RobotState&) = default;
};

// Continuous action spaces of the three reference platforms. Lidar and
// acceleration values are configuration defaults, not platform datasheets.

inline RobotSpec turtlebot3() {
  return {"turtlebot3", Kinematics::differential, 0.105,
          {{0.0, 0.22}, {0.0, 0.0}, {-2.7, 2.7}}, {}, {360, 2.0 * std::numbers::pi, 3.5, 0.0}};
}

inline RobotSpec jackal() {
  return {"jackal", Kinematics::car_like, 0.267,
          {{-2.0, 2.0}, {0.0, 0.0}, {-4.0, 4.0}}, {}, {360, 2.0 * std::numbers::pi, 10.0, 0.0}};
}

inline RobotSpec robotino() {
  return {"robotino", Kinematics::holonomic, 0.185,
          {{-2.78, 2.78}, {-2.78, 2.78}, {-1.0, 1.0}}, {}, {360, 2.0 * std::numbers::pi, 5.6, 0.0}};
}

inline std::vector<RobotSpec> builtin_robots() { return {turtlebot3(), jackal(), robotino()}; }

inline std::optional<RobotSpec> find_builtin_robot(const std::string& name) {
  for (auto& r : builtin_robots())
    if (r.name == name) return r;
  return std::nullopt;
}

/// Projects a command onto the robot's action box. NaN components map to 0
/// before clamping; vy is forced to 0 for non-holonomic bases.
inline VelocityCommand clamp_action(VelocityCommand cmd, const RobotSpec& spec) {
  auto finite = [](double v) { return std::isnan(v) ? 0.0 : v; };
  VelocityCommand out;
  out.vx = spec.bounds.vlin_x.clamp(finite(cmd.vx));
  out.vy = spec.holonomic() ? spec.bounds.vlin_y.clamp(finite(cmd.vy)) : 0.0;
  out.omega = spec.bounds.vang.clamp(finite(cmd.omega));
  return out;
}

inline bool within_bounds(const VelocityCommand& v, const RobotSpec& spec) {
  return spec.bounds.vlin_x.contains(v.vx) &&
         (spec.holonomic() ? spec.bounds.vlin_y.contains(v.vy) : v.vy == 0.0) &&
         spec.bounds.vang.contains(v.omega);
}

/// Pose after moving for `t` seconds at constant body-frame velocity. The
/// rotating body frame is integrated in closed form, so for vy = 0 this is the
/// exact unicycle arc.
inline Pose2 integrate_pose(const Pose2& p, const VelocityCommand& v, double t) {
  const double dth = v.omega * t;
  double bx, by;  // displacement in the initial body frame
  if (std::abs(dth) < 1e-9) {
    // second-order series keeps the tiny-rotation case smooth
    bx = (v.vx - 0.5 * v.vy * dth) * t;
    by = (v.vy + 0.5 * v.vx * dth) * t;
  } else {
    const double s = std::sin(dth), c = std::cos(dth);
    bx = (v.vx * s + v.vy * (c - 1.0)) / v.omega;
    by = (v.vx * (1.0 - c) + v.vy * s) / v.omega;
  }
  const double cs = std::cos(p.theta), sn = std::sin(p.theta);
  return {p.x + cs * bx - sn * by, p.y + sn * bx + cs * by, normalize_angle(p.theta + dth)};
}

/// Moves each velocity component toward `cmd` by at most accel * dt, then
/// integrates the pose with the updated velocity.
inline RobotState step(const RobotState& state, const VelocityCommand& cmd, const RobotSpec& spec,
                       double dt) {
  if (!(dt > 0.0)) throw DomainError("step: dt must be positive");
  auto approach = [](double current, double target, double max_delta) {
    return current + std::clamp(target - current, -max_delta, max_delta);
  };
  RobotState next;
  next.velocity.vx = approach(state.velocity.vx, cmd.vx, spec.accel.lin * dt);
  next.velocity.vy =
      spec.holonomic() ? approach(state.velocity.vy, cmd.vy, spec.accel.lin * dt) : 0.0;
  next.velocity.omega = approach(state.velocity.omega, cmd.omega, spec.accel.ang * dt);
  next.pose = integrate_pose(state.pose, next.velocity, dt);
  next.stamp = state.stamp + dt;
  return next;
}

// --- JSON -----------------------------------------------------------------

inline nlohmann::json to_json(const LidarSpec& l) {
  return {{"beam_count", l.beam_count},
          {"fov", l.fov},
          {"max_range", l.max_range},
          {"noise_sigma", l.noise_sigma}};
}

inline nlohmann::json to_json(const ActionBounds& b) {
  return {{"vlin_x", {b.vlin_x.min, b.vlin_x.max}},
          {"vlin_y", {b.vlin_y.min, b.vlin_y.max}},
          {"vang", {b.vang.min, b.vang.max}}};
}

inline nlohmann::json to_json(const RobotSpec& r) {
  return {{"name", r.name},
          {"kinematics", to_string(r.kinematics)},
          {"radius", r.radius},
          {"bounds", to_json(r.bounds)},
          {"accel", {{"lin", r.accel.lin}, {"ang", r.accel.ang}}},
          {"lidar", to_json(r.lidar)}};
}

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* key,
                                   const std::string& path) {
  if (!j.is_object()) throw ParseError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(path + "." + key + ": missing");
  return *it;
}

inline double number(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path + ": expected a number");
  return j.get<double>();
}

inline Interval interval(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ParseError(path + ": expected [min, max]");
  return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
}

}  // namespace detail

inline LidarSpec lidar_from_json(const nlohmann::json& j, const std::string& path = "lidar") {
  LidarSpec l;
  const auto& bc = detail::field(j, "beam_count", path);
  if (!bc.is_number_integer()) throw ParseError(path + ".beam_count: expected an integer");
  l.beam_count = bc.get<int>();
  l.fov = detail::number(detail::field(j, "fov", path), path + ".fov");
  l.max_range = detail::number(detail::field(j, "max_range", path), path + ".max_range");
  if (j.contains("noise_sigma")) l.noise_sigma = detail::number(j["noise_sigma"], path + ".noise_sigma");
  return l;
}

inline ActionBounds bounds_from_json(const nlohmann::json& j, const std::string& path = "bounds") {
  ActionBounds b;
  b.vlin_x = detail::interval(detail::field(j, "vlin_x", path), path + ".vlin_x");
  b.vlin_y = j.contains("vlin_y") ? detail::interval(j["vlin_y"], path + ".vlin_y") : Interval{};
  b.vang = detail::interval(detail::field(j, "vang", path), path + ".vang");
  return b;
}

inline RobotSpec robot_from_json(const nlohmann::json& j, const std::string& path = "robot") {
  RobotSpec r;
  const auto& name = detail::field(j, "name", path);
  if (!name.is_string()) throw ParseError(path + ".name: expected a string");
  r.name = name.get<std::string>();
  const auto& kin = detail::field(j, "kinematics", path);
  if (!kin.is_string()) throw ParseError(path + ".kinematics: expected a string");
  r.kinematics = kinematics_from_string(kin.get<std::string>());
  r.radius = detail::number(detail::field(j, "radius", path), path + ".radius");
  r.bounds = bounds_from_json(detail::field(j, "bounds", path), path + ".bounds");
  if (j.contains("accel")) {
    const auto& a = j["accel"];
    r.accel.lin = detail::number(detail::field(a, "lin", path + ".accel"), path + ".accel.lin");
    r.accel.ang = detail::number(detail::field(a, "ang", path + ".accel"), path + ".accel.ang");
  }
  if (j.contains("lidar")) r.lidar = lidar_from_json(j["lidar"], path + ".lidar");
  r.validate();
  return r;
}

/// Resolves a robot by built-in name, or by path to a robot spec JSON file.
inline RobotSpec resolve_robot(const std::string& name_or_path) {
  if (auto builtin = find_builtin_robot(name_or_path)) return *builtin;
  std::ifstream in(name_or_path);
  if (!in) throw ConfigError("unknown robot '" + name_or_path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(name_or_path + ": " + e.what());
  }
  return robot_from_json(j);
}

}  // namespace navbench
