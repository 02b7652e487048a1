#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "navbench/bench/planner_factory.hpp"
#include "navbench/core/random.hpp"
#include "navbench/crowd/social_force.hpp"
#include "navbench/metrics/metrics.hpp"
#include "navbench/metrics/record.hpp"
#include "navbench/planning/astar.hpp"
#include "navbench/planning/local_planner.hpp"
#include "navbench/planning/subgoal.hpp"
#include "navbench/task/scenario.hpp"
#include "navbench/task/task.hpp"
#include "navbench/world/lidar.hpp"

namespace navbench {

struct EpisodeOptions {
  double dt = 0.05;              ///< simulation step, s
  double command_period = 0.1;   ///< planner tick period, integer multiple of dt
  double timeout = 60.0;         ///< simulated seconds
  double goal_tolerance = 0.3;   ///< m
  double replan_distance = 1.5;  ///< re-run A* when the robot strays this far from the path, m
  SubgoalPolicy subgoal;

  int steps_per_command() const {
    if (!(dt > 0.0)) throw ConfigError("episode: dt must be positive");
    if (!(timeout > 0.0)) throw ConfigError("episode: timeout must be positive");
    const double ratio = command_period / dt;
    const long k = std::lround(ratio);
    if (k < 1 || std::abs(ratio - static_cast<double>(k)) > 1e-9)
      throw ConfigError("episode: command_period must be a positive integer multiple of dt");
    return static_cast<int>(k);
  }
};

/// Labels that go into the record header but do not influence the simulation.
struct EpisodeLabels {
  std::string episode_id;
  std::string planner;
  int obstacle_count = -1;  ///< -1: number of scenario pedestrians
  int run = 0;
};

namespace detail {

inline Scan safe_raycast(const OccupancyGrid& grid, const Pose2& pose, const LidarSpec& spec,
                         std::span<const Disc> discs, Rng& noise) {
  // A robot pushed off the raster reads as fully blocked, which also counts as contact.
  if (!grid.contains(pose.position())) return Scan{std::vector<double>(spec.beam_count, 0.0), 0.0};
  return raycast(grid, pose.position(), pose.theta, spec, discs, &noise);
}

inline double clearance_at(const OccupancyGrid& grid, std::span<const Disc> discs, Vec2 p, double radius) {
  if (!grid.contains(p)) return 0.0;
  return std::max(0.0, distance_to_nearest_obstacle(grid, discs, p) - radius);
}

inline std::optional<GlobalPath> try_astar(const OccupancyGrid& grid, Vec2 start, Vec2 goal, double radius) {
  try {
    return astar(grid, start, goal, radius);
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// Runs one episode to goal, timeout, or planner failure. The record is fully
/// determined by (scenario, grid, robot, planner behavior, options, seed).
///
/// Per step: planner tick on the latest observation (every command period),
/// clamp, robot step, crowd step, raycast, sample.
inline EpisodeRecord run_episode(const Scenario& scenario, const OccupancyGrid& grid, const RobotSpec& robot,
                                 LocalPlanner& planner, std::uint64_t seed, const EpisodeOptions& opt = {},
                                 const EpisodeLabels& labels = {}) {
  const int steps_per_cmd = opt.steps_per_command();
  robot.validate();

  EpisodeRecord rec;
  auto& meta = rec.meta;
  meta.episode_id = labels.episode_id.empty() ? scenario.name + "_" + std::to_string(seed) : labels.episode_id;
  meta.scenario = scenario.name;
  meta.map = scenario.map.label();
  meta.robot = robot.name;
  meta.planner = labels.planner;
  meta.obstacle_count =
      labels.obstacle_count >= 0 ? labels.obstacle_count : static_cast<int>(scenario.pedestrians.size());
  meta.run = labels.run;
  meta.seed = seed;
  meta.dt = opt.dt;
  meta.timeout = opt.timeout;
  meta.robot_radius = robot.radius;
  meta.lidar_max_range = robot.lidar.max_range;
  meta.holonomic = robot.holonomic();
  meta.start = scenario.robot.start;
  meta.goal = scenario.robot.goal;

  const Vec2 goal = scenario.robot.goal;
  Crowd crowd(grid, agents_from_scenario(scenario), scenario.crowd_mode, derive_seed({seed, 1}));
  Rng noise(derive_seed({seed, 2}));

  RobotState state;
  state.pose = scenario.robot.start;
  state.pose.theta = normalize_angle(state.pose.theta);

  double now = 0.0;
  std::vector<Event> events;
  auto record_sample = [&](const Scan& scan, const std::vector<Disc>& discs) {
    rec.samples.push_back({now, state.pose, state.velocity, scan.min_range(),
                           detail::clearance_at(grid, discs, state.pose.position(), robot.radius)});
  };

  auto discs = crowd.discs();
  Scan scan = detail::safe_raycast(grid, state.pose, robot.lidar, discs, noise);
  scan.stamp = now;
  record_sample(scan, discs);

  SpatialHorizon horizon(opt.subgoal);
  auto straight = [&](Vec2 from) { return GlobalPath{{from, goal}, distance(from, goal)}; };
  if (auto path = detail::try_astar(grid, state.pose.position(), goal, robot.radius)) {
    horizon.set_path(std::move(*path), goal);
  } else {
    events.push_back({now, event::no_global_path, "following the straight line to the goal"});
    horizon.set_path(straight(state.pose.position()), goal);
  }

  EpisodeInfo info;
  info.episode_id = meta.episode_id;
  info.robot = robot;
  info.grid = &grid;
  info.goal = goal;
  info.dt = opt.dt;
  info.command_period = opt.command_period;
  info.on_event = [&](const std::string& type, const std::string& detail) { events.push_back({now, type, detail}); };

  std::string status = "ok";
  bool failed = false;
  try {
    planner.reset(info);
  } catch (const std::exception& e) {
    events.push_back({now, event::planner_error, e.what()});
    failed = true;
  }

  VelocityCommand cmd;
  for (long k = 1; !failed; ++k) {
    if ((k - 1) % steps_per_cmd == 0) {
      const Vec2 p = state.pose.position();
      const auto& path = horizon.path();
      if (!path.empty() && distance(project_onto_path(path, p).point, p) > opt.replan_distance) {
        if (auto fresh = detail::try_astar(grid, p, goal, robot.radius)) horizon.set_path(std::move(*fresh), goal);
      }
      Observation obs;
      obs.stamp = now;
      obs.scan = &scan;
      obs.state = state;
      obs.subgoal = horizon.update(state, now);
      obs.goal = goal;
      try {
        cmd = clamp_action(planner.plan(obs), robot);
      } catch (const std::exception& e) {
        events.push_back({now, event::planner_error, e.what()});
        failed = true;
        break;
      }
    }
    state = step(state, cmd, robot, opt.dt);
    now = static_cast<double>(k) * opt.dt;
    state.stamp = now;
    const Disc robot_zone{state.pose.position(), robot.radius + kPedestrianStartMargin};
    crowd.step(opt.dt, std::span(&robot_zone, 1));
    discs = crowd.discs();
    scan = detail::safe_raycast(grid, state.pose, robot.lidar, discs, noise);
    scan.stamp = now;
    record_sample(scan, discs);

    if (distance(state.pose.position(), goal) < opt.goal_tolerance) {
      events.push_back({now, event::goal_reached, {}});
      status = "goal_reached";
      break;
    }
    if (now >= opt.timeout - 1e-9) {
      events.push_back({now, event::timeout, {}});
      status = "timeout";
      break;
    }
  }
  if (failed) status = "planner_error";
  try {
    planner.close(status);
  } catch (const std::exception&) {
  }

  for (auto& e : collision_events(detect_collisions(rec.samples, robot.radius))) events.push_back(std::move(e));
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.stamp < b.stamp; });
  rec.events = std::move(events);
  return rec;
}

/// Resolves the planner by id (ConfigError before anything runs) and runs the episode.
inline EpisodeRecord run_episode(const Scenario& scenario, const OccupancyGrid& grid, const RobotSpec& robot,
                                 const std::string& planner_id, std::uint64_t seed, const EpisodeOptions& opt = {},
                                 EpisodeLabels labels = {}, const PlannerOptions& popt = {}) {
  check_planner_id(planner_id);
  opt.steps_per_command();
  auto planner = make_planner(planner_id, popt);
  if (labels.planner.empty()) labels.planner = planner_id;
  return run_episode(scenario, grid, robot, *planner, seed, opt, labels);
}

}  // namespace navbench
