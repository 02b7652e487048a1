#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "navbench/core/error.hpp"
#include "navbench/core/random.hpp"
#include "navbench/crowd/social_force.hpp"
#include "navbench/mapgen/map_generator.hpp"
#include "navbench/robot/kinematics.hpp"
#include "navbench/task/scenario.hpp"
#include "navbench/world/connectivity.hpp"

namespace navbench {

enum class TaskMode { random, scenario, staged };

inline const char* to_string(TaskMode m) {
  switch (m) {
    case TaskMode::random: return "random";
    case TaskMode::scenario: return "scenario";
    case TaskMode::staged: return "staged";
  }
  return "random";
}

inline TaskMode task_mode_from_string(const std::string& s) {
  if (s == "random") return TaskMode::random;
  if (s == "scenario") return TaskMode::scenario;
  if (s == "staged") return TaskMode::staged;
  throw ConfigError("unknown task mode '" + s + "'");
}

/// Minimum straight-line distance between robot start and goal in sampled tasks.
inline constexpr double kMinStartGoalSeparation = 2.0;
/// Pedestrians do not spawn within this distance of the robot's footprint.
inline constexpr double kPedestrianStartMargin = 0.5;

struct TaskConfig {
  TaskMode mode = TaskMode::random;
  int runs_per_scenario = 1;
  std::string planner = "dwa";
  std::string robot = "turtlebot3";
  int obstacle_count = 0;          ///< random mode pedestrians
  double pedestrian_speed = 0.3;   ///< m/s, random mode
  double timeout = 60.0;           ///< simulated seconds
  std::uint64_t seed = 0;
  std::filesystem::path scenario;  ///< scenario mode
  std::optional<MapRef> map;       ///< random mode
  std::vector<MapGenConfig> curriculum;  ///< staged mode
  std::size_t promotion_window = 10;
  double promotion_threshold = 0.8;

  void validate() const {
    if (runs_per_scenario < 1) throw ConfigError("task: runs_per_scenario must be >= 1");
    if (!(timeout > 0.0)) throw ConfigError("task: timeout must be positive");
    if (obstacle_count < 0) throw ConfigError("task: obstacle_count must be >= 0");
    if (mode == TaskMode::scenario && scenario.empty())
      throw ConfigError("task: scenario mode needs a scenario file");
    if (mode == TaskMode::random && !map) throw ConfigError("task: random mode needs a map");
    if (mode == TaskMode::staged && curriculum.empty())
      throw ConfigError("task: staged mode needs a curriculum");
  }
};

/// Draws a random task on `grid`: robot start/goal from the largest region the
/// robot fits in, at least 2 m apart, plus `cfg.obstacle_count` pedestrians
/// with random start and goal that re-spawn when they arrive.
/// `region` must be the FreeRegion of `grid` for the robot's radius.
inline Scenario sample_random_task(const OccupancyGrid& grid, const FreeRegion& region,
                                   const TaskConfig& cfg, Rng& rng, const MapRef& map_ref = {}) {
  const RobotSpec robot = resolve_robot(cfg.robot);
  if (region.radius() != robot.radius)
    throw DomainError("sample_random_task: region radius does not match the robot");
  if (region.empty()) throw GenerationError("sample_random_task: no free space for the robot");

  Scenario s;
  s.map = map_ref;
  s.robot.spec = cfg.robot;
  s.crowd_mode = CrowdMode::respawn;
  std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);

  bool found = false;
  for (int attempt = 0; attempt < kSpawnAttempts && !found; ++attempt) {
    const Vec2 start = region.sample(rng);
    if (!is_placeable_disc(grid, start, robot.radius)) continue;
    for (int g = 0; g < 64; ++g) {
      const Vec2 goal = region.sample(rng);
      if (distance(start, goal) < kMinStartGoalSeparation) continue;
      if (!is_placeable_disc(grid, goal, robot.radius)) continue;
      s.robot.start = {start.x, start.y, normalize_angle(heading(rng))};
      s.robot.goal = goal;
      found = true;
      break;
    }
  }
  if (!found) throw GenerationError("sample_random_task: no start/goal pair 2 m apart");

  SocialForceParams params;
  params.desired_speed = cfg.pedestrian_speed;
  const Disc keep_clear[] = {{s.robot.start.position(), robot.radius + kPedestrianStartMargin}};
  const auto agents = spawn_agents(static_cast<std::size_t>(cfg.obstacle_count), grid, rng, params,
                                   keep_clear);
  for (const auto& a : agents)
    s.pedestrians.push_back({a.position, a.waypoints, params.desired_speed, SocialState::walking()});
  return s;
}

inline Scenario sample_random_task(const OccupancyGrid& grid, const TaskConfig& cfg, Rng& rng,
                                   const MapRef& map_ref = {}) {
  const FreeRegion region(grid, resolve_robot(cfg.robot).radius);
  return sample_random_task(grid, region, cfg, rng, map_ref);
}

/// Produces the scenario for each episode according to the task mode.
/// Single consumer; staged mode needs `record()` after each episode.
class TaskSource {
 public:
  explicit TaskSource(TaskConfig cfg, std::filesystem::path base_dir = {})
      : cfg_(std::move(cfg)), base_dir_(std::move(base_dir)), rng_(derive_seed({cfg_.seed, 0x7a5c})) {
    cfg_.validate();
    switch (cfg_.mode) {
      case TaskMode::scenario: {
        auto path = cfg_.scenario;
        if (path.is_relative() && !base_dir_.empty()) path = base_dir_ / path;
        scenario_ = load_scenario(path);
        scenario_dir_ = path.parent_path();
        break;
      }
      case TaskMode::random:
        break;
      case TaskMode::staged:
        schedule_.emplace(cfg_.curriculum,
                          success_rate_rule(cfg_.promotion_window, cfg_.promotion_threshold));
        break;
    }
  }

  /// Staged mode with a custom promotion rule.
  TaskSource(TaskConfig cfg, PromotionRule rule, std::filesystem::path base_dir = {})
      : TaskSource(std::move(cfg), std::move(base_dir)) {
    if (schedule_) schedule_.emplace(cfg_.curriculum, std::move(rule));
  }

  Scenario next() {
    ++count_;
    switch (cfg_.mode) {
      case TaskMode::scenario:
        return *scenario_;
      case TaskMode::random: {
        const auto& grid = grid_for(*cfg_.map);
        Scenario s = sample_random_task(grid, cfg_, rng_, *cfg_.map);
        s.name = cfg_.map->label() + "_task" + std::to_string(count_);
        s.seed = cfg_.seed;
        return s;
      }
      case TaskMode::staged: {
        MapRef ref;
        ref.generate = schedule_->current();
        const auto& grid = grid_for(ref);
        Scenario s = sample_random_task(grid, cfg_, rng_, ref);
        s.name = ref.label() + "_task" + std::to_string(count_);
        s.seed = cfg_.seed;
        return s;
      }
    }
    throw ConfigError("unreachable task mode");
  }

  void record(bool success) {
    if (schedule_) schedule_->record(success);
  }

  int stage() const { return schedule_ ? schedule_->stage() : 1; }

  /// Map of a scenario produced by this source (cached).
  const OccupancyGrid& grid_for(const MapRef& ref) {
    const std::string key = to_json(ref).dump();
    auto it = grids_.find(key);
    if (it == grids_.end())
      it = grids_.emplace(key, resolve_map(ref, cfg_.mode == TaskMode::scenario ? scenario_dir_ : base_dir_)).first;
    return it->second;
  }

  const TaskConfig& config() const { return cfg_; }

 private:
  TaskConfig cfg_;
  std::filesystem::path base_dir_;
  std::filesystem::path scenario_dir_;
  Rng rng_;
  std::optional<Scenario> scenario_;
  std::optional<StageSchedule> schedule_;
  std::map<std::string, OccupancyGrid> grids_;
  int count_ = 0;
};

}  // namespace navbench
