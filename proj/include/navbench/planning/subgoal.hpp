#pragma once

#include <limits>
#include <optional>

#include "navbench/core/error.hpp"
#include "navbench/core/geometry.hpp"
#include "navbench/planning/astar.hpp"
#include "navbench/robot/kinematics.hpp"

namespace navbench {

/// Spatial-horizon waypoint generator settings.
struct SubgoalPolicy {
  double d_ahead = 2.0;   ///< arc distance ahead on the global path, m
  double t_lim = 4.0;     ///< forced refresh period, s
  double reach_tolerance = 0.3;

  void validate() const {
    if (!(d_ahead > 0.0) || !(t_lim > 0.0))
      throw DomainError("subgoal policy: d_ahead and t_lim must be positive");
  }
};

struct PathProjection {
  std::size_t segment = 0;  ///< index of the segment start vertex
  double along = 0.0;       ///< arc length from path start to the projection
  Vec2 point;
  double distance = std::numeric_limits<double>::infinity();
};

/// Closest point on the polyline to `p` (first one on ties).
inline PathProjection project_onto_path(const GlobalPath& path, Vec2 p) {
  PathProjection best;
  if (path.waypoints.empty()) return best;
  if (path.waypoints.size() == 1) {
    best.point = path.waypoints.front();
    best.distance = distance(p, best.point);
    return best;
  }
  double arc = 0.0;
  for (std::size_t i = 0; i + 1 < path.waypoints.size(); ++i) {
    const Vec2 a = path.waypoints[i], b = path.waypoints[i + 1];
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    const double u = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    const Vec2 q = a + u * ab;
    const double d = distance(p, q);
    if (d < best.distance) best = {i, arc + u * std::sqrt(len2), q, d};
    arc += std::sqrt(len2);
  }
  return best;
}

/// Point at arc length `s` along the path (clamped to its ends).
inline Vec2 point_at_arc(const GlobalPath& path, double s) {
  if (path.waypoints.empty()) throw DomainError("point_at_arc: empty path");
  if (s <= 0.0) return path.waypoints.front();
  double arc = 0.0;
  for (std::size_t i = 0; i + 1 < path.waypoints.size(); ++i) {
    const Vec2 a = path.waypoints[i], b = path.waypoints[i + 1];
    const double len = distance(a, b);
    if (arc + len >= s && len > 0.0) return a + ((s - arc) / len) * (b - a);
    arc += len;
  }
  return path.waypoints.back();
}

/// The path point `d_ahead` beyond the projection of `position`, or the path
/// end (`goal` when given) once less than `d_ahead` of path remains.
inline Vec2 subgoal_on_path(const GlobalPath& path, Vec2 position, double d_ahead,
                            std::optional<Vec2> goal = std::nullopt) {
  if (path.waypoints.empty()) {
    if (goal) return *goal;
    throw DomainError("next_subgoal: empty path");
  }
  const auto proj = project_onto_path(path, position);
  const double remaining = path.length() - proj.along;
  if (remaining < d_ahead) return goal.value_or(path.waypoints.back());
  return point_at_arc(path, proj.along + d_ahead);
}

/// Stateful spatial horizon: the subgoal is recomputed when the robot comes
/// within `reach_tolerance` of it or `t_lim` has elapsed since the last update.
class SpatialHorizon {
 public:
  explicit SpatialHorizon(SubgoalPolicy policy = {}) : policy_(policy) { policy_.validate(); }

  void set_path(GlobalPath path, Vec2 goal) {
    path_ = std::move(path);
    goal_ = goal;
    subgoal_.reset();
  }

  /// Returns the active subgoal at simulated time `now`.
  Vec2 update(const RobotState& robot, double now) {
    const Vec2 p = robot.pose.position();
    const bool stale = !subgoal_ || distance(p, *subgoal_) < policy_.reach_tolerance ||
                       now - last_update_ >= policy_.t_lim - 1e-9;
    if (stale) {
      subgoal_ = subgoal_on_path(path_, p, policy_.d_ahead, goal_);
      last_update_ = now;
      ++updates_;
    }
    return *subgoal_;
  }

  const GlobalPath& path() const { return path_; }
  double last_update() const { return last_update_; }
  int updates() const { return updates_; }

 private:
  SubgoalPolicy policy_;
  GlobalPath path_;
  Vec2 goal_;
  std::optional<Vec2> subgoal_;
  double last_update_ = 0.0;
  int updates_ = 0;
};

/// One-shot form: subgoal for `robot` on `path` under `policy`.
inline Vec2 next_subgoal(const GlobalPath& path, const RobotState& robot,
                         const SubgoalPolicy& policy) {
  return subgoal_on_path(path, robot.pose.position(), policy.d_ahead);
}

}  // namespace navbench
