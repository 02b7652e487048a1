#pragma once

#include <functional>
#include <numbers>
#include <string>

#include "navbench/planning/dwa.hpp"
#include "navbench/robot/kinematics.hpp"
#include "navbench/world/lidar.hpp"
#include "navbench/world/occupancy_grid.hpp"

namespace navbench {

/// Everything a local planner learns once per episode.
struct EpisodeInfo {
  std::string episode_id;
  RobotSpec robot;
  const OccupancyGrid* grid = nullptr;
  Vec2 goal;
  double dt = 0.05;
  double command_period = 0.1;
  /// Planner-side events (e.g. "deadline_missed") for the episode record.
  std::function<void(const std::string& type, const std::string& detail)> on_event;
};

/// One planner tick worth of input.
struct Observation {
  double stamp = 0.0;
  const Scan* scan = nullptr;
  RobotState state;
  Vec2 subgoal;
  Vec2 goal;
};

/// Local planner: one instance per episode runner. `plan` may throw
/// ProtocolError/TransportError, which the harness records as planner_error.
class LocalPlanner {
 public:
  virtual ~LocalPlanner() = default;
  virtual void reset(const EpisodeInfo& info) { info_ = info; }
  virtual VelocityCommand plan(const Observation& obs) = 0;
  virtual void close(const std::string& /*status*/) {}

 protected:
  EpisodeInfo info_;
};

class DwaPlanner final : public LocalPlanner {
 public:
  explicit DwaPlanner(DwaConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  void reset(const EpisodeInfo& info) override {
    LocalPlanner::reset(info);
    cfg_.command_period = info.command_period;
  }

  VelocityCommand plan(const Observation& obs) override {
    return dwa_plan(obs.state, *obs.scan, obs.subgoal, info_.robot, cfg_);
  }

 private:
  DwaConfig cfg_;
};

/// Test-only straight-line follower: turns toward the goal, then drives at
/// full speed. Ignores obstacles.
class StraightLinePlanner final : public LocalPlanner {
 public:
  VelocityCommand plan(const Observation& obs) override {
    const auto& spec = info_.robot;
    const Vec2 d = obs.goal - obs.state.pose.position();
    const double bearing = normalize_angle(std::atan2(d.y, d.x) - obs.state.pose.theta);
    if (spec.holonomic()) {
      const Vec2 body = rotate(normalized(d), -obs.state.pose.theta);
      const double speed = std::min(spec.bounds.vlin_x.max, spec.bounds.vlin_y.max);
      return {body.x * speed, body.y * speed, 0.0};
    }
    const double omega = spec.bounds.vang.clamp(2.0 * bearing);
    const double vx = std::abs(bearing) < 0.2 ? spec.bounds.vlin_x.max : 0.0;
    return {vx, 0.0, omega};
  }
};

}  // namespace navbench
